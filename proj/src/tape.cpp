#include "dynlearn/tape.hpp"

#include <cmath>
#include <string>

#include "dynlearn/errors.hpp"

namespace dynlearn {

namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw InvalidInput(std::string(op) + ": " + detail);
}

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

// LSTM forward over a sequence already laid out in scan order.
// gates holds post-activation (i, f, g, o) blocks, c the cell states,
// hcand = tanh(c).
void lstm_scan(const Tensor& x, const Tensor& w, const Tensor& r, const Tensor& bias,
               Tensor& gates, Tensor& c, Tensor& hcand, Tensor& h) {
  const int T = x.rows();
  const int in = x.cols();
  const int h4 = w.rows();
  const int hs = h4 / 4;

  gates = Tensor(T, h4);
  c = Tensor(T, hs);
  hcand = Tensor(T, hs);
  h = Tensor(T, hs);

  std::vector<double> z(h4);
  for (int t = 0; t < T; ++t) {
    const double* xt = x.data() + static_cast<size_t>(t) * in;
    const double* hprev = t > 0 ? h.data() + static_cast<size_t>(t - 1) * hs : nullptr;
    for (int g = 0; g < h4; ++g) {
      double acc = bias(0, g);
      const double* wg = w.data() + static_cast<size_t>(g) * in;
      for (int j = 0; j < in; ++j) acc += wg[j] * xt[j];
      if (hprev) {
        const double* rg = r.data() + static_cast<size_t>(g) * hs;
        for (int j = 0; j < hs; ++j) acc += rg[j] * hprev[j];
      }
      z[g] = acc;
    }
    double* gt = gates.data() + static_cast<size_t>(t) * h4;
    for (int j = 0; j < hs; ++j) {
      gt[j] = 1.0 / (1.0 + std::exp(-z[j]));                    // input gate
      gt[hs + j] = 1.0 / (1.0 + std::exp(-z[hs + j]));          // forget gate
      gt[2 * hs + j] = std::tanh(z[2 * hs + j]);                // cell candidate
      gt[3 * hs + j] = 1.0 / (1.0 + std::exp(-z[3 * hs + j]));  // output gate
    }
    for (int j = 0; j < hs; ++j) {
      const double cprev = t > 0 ? c(t - 1, j) : 0.0;
      const double cj = gt[hs + j] * cprev + gt[j] * gt[2 * hs + j];
      c(t, j) = cj;
      const double th = std::tanh(cj);
      hcand(t, j) = th;
      h(t, j) = gt[3 * hs + j] * th;
    }
  }
}

// Backprop through lstm_scan. dh is the upstream gradient on h (scan order).
void lstm_scan_backward(const Tensor& x, const Tensor& w, const Tensor& r,
                        const Tensor& gates, const Tensor& c, const Tensor& hcand,
                        const Tensor& dh_up, Tensor& dx, Tensor& dw, Tensor& dr, Tensor& db) {
  const int T = x.rows();
  const int in = x.cols();
  const int h4 = w.rows();
  const int hs = h4 / 4;

  dx = Tensor(T, in);
  dw = Tensor(h4, in);
  dr = Tensor(h4, hs);
  db = Tensor(1, h4);

  std::vector<double> dh(hs, 0.0), dc(hs, 0.0), dz(h4);
  for (int t = T - 1; t >= 0; --t) {
    const double* gt = gates.data() + static_cast<size_t>(t) * h4;
    for (int j = 0; j < hs; ++j) dh[j] += dh_up(t, j);
    for (int j = 0; j < hs; ++j) {
      const double i_g = gt[j], f_g = gt[hs + j], g_c = gt[2 * hs + j], o_g = gt[3 * hs + j];
      const double th = hcand(t, j);
      const double d_o = dh[j] * th;
      const double dcj = dc[j] + dh[j] * o_g * (1.0 - th * th);
      const double cprev = t > 0 ? c(t - 1, j) : 0.0;
      dz[j] = dcj * g_c * i_g * (1.0 - i_g);
      dz[hs + j] = dcj * cprev * f_g * (1.0 - f_g);
      dz[2 * hs + j] = dcj * i_g * (1.0 - g_c * g_c);
      dz[3 * hs + j] = d_o * o_g * (1.0 - o_g);
      dc[j] = dcj * f_g;
      dh[j] = 0.0;
    }
    const double* xt = x.data() + static_cast<size_t>(t) * in;
    for (int g = 0; g < h4; ++g) {
      const double dzg = dz[g];
      db(0, g) += dzg;
      double* dwg = dw.data() + static_cast<size_t>(g) * in;
      for (int j = 0; j < in; ++j) dwg[j] += dzg * xt[j];
      const double* wg = w.data() + static_cast<size_t>(g) * in;
      double* dxt = dx.data() + static_cast<size_t>(t) * in;
      for (int j = 0; j < in; ++j) dxt[j] += dzg * wg[j];
      if (t > 0) {
        double* drg = dr.data() + static_cast<size_t>(g) * hs;
        const double* rg = r.data() + static_cast<size_t>(g) * hs;
        for (int j = 0; j < hs; ++j) {
          // h(t-1) is recomputed from saved o * hcand
          const double hp = gates(t - 1, 3 * hs + j) * hcand(t - 1, j);
          drg[j] += dzg * hp;
          dh[j] += dzg * rg[j];
        }
      }
    }
  }
}

Tensor reverse_rows(const Tensor& a) {
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out(i, j) = a(a.rows() - 1 - i, j);
  return out;
}

}  // namespace

Tape::Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

bool Tape::any_needs_grad(const std::vector<Var>& in) const {
  for (Var v : in)
    if (nodes_[v].needs_grad) return true;
  return false;
}

Tape::Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.val = std::move(value);
  n.needs_grad = false;
  return push(std::move(n));
}

Tape::Var Tape::param(const std::string& name, Tensor value) {
  require(!name.empty(), "param", "empty name");
  Node n;
  n.op = Op::kLeaf;
  n.val = std::move(value);
  n.needs_grad = true;
  n.param_name = name;
  return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
  Node n;
  n.op = Op::kAdd;
  n.in = {a, b};
  n.val = dynlearn::add(nodes_[a].val, nodes_[b].val);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::add_row(Var a, Var bias) {
  Node n;
  n.op = Op::kAddRow;
  n.in = {a, bias};
  n.val = add_row_broadcast(nodes_[a].val, nodes_[bias].val);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::sub(Var a, Var b) {
  Node n;
  n.op = Op::kSub;
  n.in = {a, b};
  n.val = dynlearn::sub(nodes_[a].val, nodes_[b].val);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::mul(Var a, Var b) {
  Node n;
  n.op = Op::kMul;
  n.in = {a, b};
  n.val = dynlearn::mul(nodes_[a].val, nodes_[b].val);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::matmul(Var a, Var b) {
  Node n;
  n.op = Op::kMatMul;
  n.in = {a, b};
  n.val = dynlearn::matmul(nodes_[a].val, nodes_[b].val);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::transpose(Var a) {
  Node n;
  n.op = Op::kTranspose;
  n.in = {a};
  n.val = dynlearn::transpose(nodes_[a].val);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::kTanh;
  n.in = {a};
  n.val = nodes_[a].val;
  for (long i = 0; i < n.val.size(); ++i) n.val.data()[i] = std::tanh(n.val.data()[i]);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::kSigmoid;
  n.in = {a};
  n.val = nodes_[a].val;
  for (long i = 0; i < n.val.size(); ++i) n.val.data()[i] = 1.0 / (1.0 + std::exp(-n.val.data()[i]));
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat", "no inputs");
  const int rows = nodes_[parts[0]].val.rows();
  int cols = 0;
  for (Var v : parts) {
    require(nodes_[v].val.rows() == rows, "concat", "row mismatch");
    cols += nodes_[v].val.cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.in = parts;
  n.val = Tensor(rows, cols);
  int off = 0;
  for (Var v : parts) {
    const Tensor& p = nodes_[v].val;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < p.cols(); ++j) n.val(i, off + j) = p(i, j);
    off += p.cols();
  }
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::slice_rows(Var a, int r0, int r1) {
  const Tensor& t = nodes_[a].val;
  require(0 <= r0 && r0 <= r1 && r1 <= t.rows(), "slice_rows", "bounds");
  Node n;
  n.op = Op::kSliceRows;
  n.in = {a};
  n.i0 = r0;
  n.i1 = r1;
  n.val = Tensor(r1 - r0, t.cols());
  for (int i = r0; i < r1; ++i)
    for (int j = 0; j < t.cols(); ++j) n.val(i - r0, j) = t(i, j);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::slice_cols(Var a, int c0, int c1) {
  const Tensor& t = nodes_[a].val;
  require(0 <= c0 && c0 <= c1 && c1 <= t.cols(), "slice_cols", "bounds");
  Node n;
  n.op = Op::kSliceCols;
  n.in = {a};
  n.i0 = c0;
  n.i1 = c1;
  n.val = Tensor(t.rows(), c1 - c0);
  for (int i = 0; i < t.rows(); ++i)
    for (int j = c0; j < c1; ++j) n.val(i, j - c0) = t(i, j);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.in = {a};
  n.val = Tensor::scalar(dynlearn::sum(nodes_[a].val));
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::squared_norm(Var a) {
  Node n;
  n.op = Op::kSquaredNorm;
  n.in = {a};
  n.val = Tensor::scalar(dynlearn::squared_norm(nodes_[a].val));
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::kScale;
  n.in = {a};
  n.factor = s;
  n.val = dynlearn::scale(nodes_[a].val, s);
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

Tape::Var Tape::lstm(Var seq, Var w, Var r, Var bias, bool reverse) {
  const Tensor& x = nodes_[seq].val;
  const Tensor& wt = nodes_[w].val;
  const Tensor& rt = nodes_[r].val;
  const Tensor& bt = nodes_[bias].val;
  require(wt.rows() % 4 == 0, "lstm", "weight rows not a multiple of 4");
  const int hs = wt.rows() / 4;
  require(wt.cols() == x.cols(), "lstm", "input weight shape " + shape_str(wt));
  require(rt.rows() == 4 * hs && rt.cols() == hs, "lstm", "recurrent weight shape " + shape_str(rt));
  require(bt.rows() == 1 && bt.cols() == 4 * hs, "lstm", "bias shape " + shape_str(bt));

  Node n;
  n.op = Op::kLstm;
  n.in = {seq, w, r, bias};
  n.reverse = reverse;

  const Tensor x_scan = reverse ? reverse_rows(x) : x;
  Tensor gates, c, hcand, h;
  lstm_scan(x_scan, wt, rt, bt, gates, c, hcand, h);
  n.val = reverse ? reverse_rows(h) : h;
  n.saved = {gates, c, hcand, x_scan};
  n.needs_grad = any_needs_grad(n.in);
  return push(std::move(n));
}

GradMap Tape::backward(Var loss) const {
  const Tensor& lt = nodes_[loss].val;
  if (lt.rows() != 1 || lt.cols() != 1)
    throw InvalidInput("backward: loss node is " + shape_str(lt) + ", expected 1x1");

  std::vector<Tensor> grads(nodes_.size());
  auto accum = [&](Var v, const Tensor& g) {
    if (!nodes_[v].needs_grad) return;
    if (grads[v].empty())
      grads[v] = g;
    else
      grads[v] = dynlearn::add(grads[v], g);
  };

  grads[loss] = Tensor::scalar(1.0);
  for (Var v = loss; v >= 0; --v) {
    const Node& n = nodes_[v];
    if (!n.needs_grad || grads[v].empty() || n.op == Op::kLeaf) continue;
    const Tensor& g = grads[v];
    switch (n.op) {
      case Op::kAdd:
        accum(n.in[0], g);
        accum(n.in[1], g);
        break;
      case Op::kAddRow: {
        accum(n.in[0], g);
        Tensor gb(1, g.cols());
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
        accum(n.in[1], gb);
        break;
      }
      case Op::kSub:
        accum(n.in[0], g);
        accum(n.in[1], dynlearn::scale(g, -1.0));
        break;
      case Op::kMul:
        accum(n.in[0], dynlearn::mul(g, nodes_[n.in[1]].val));
        accum(n.in[1], dynlearn::mul(g, nodes_[n.in[0]].val));
        break;
      case Op::kMatMul:
        if (nodes_[n.in[0]].needs_grad)
          accum(n.in[0], dynlearn::matmul(g, dynlearn::transpose(nodes_[n.in[1]].val)));
        if (nodes_[n.in[1]].needs_grad)
          accum(n.in[1], dynlearn::matmul(dynlearn::transpose(nodes_[n.in[0]].val), g));
        break;
      case Op::kTranspose:
        accum(n.in[0], dynlearn::transpose(g));
        break;
      case Op::kTanh: {
        Tensor gi = g;
        for (long i = 0; i < gi.size(); ++i) {
          const double y = n.val.data()[i];
          gi.data()[i] *= 1.0 - y * y;
        }
        accum(n.in[0], gi);
        break;
      }
      case Op::kSigmoid: {
        Tensor gi = g;
        for (long i = 0; i < gi.size(); ++i) {
          const double y = n.val.data()[i];
          gi.data()[i] *= y * (1.0 - y);
        }
        accum(n.in[0], gi);
        break;
      }
      case Op::kConcatCols: {
        int off = 0;
        for (Var part : n.in) {
          const Tensor& pv = nodes_[part].val;
          Tensor gp(pv.rows(), pv.cols());
          for (int i = 0; i < pv.rows(); ++i)
            for (int j = 0; j < pv.cols(); ++j) gp(i, j) = g(i, off + j);
          accum(part, gp);
          off += pv.cols();
        }
        break;
      }
      case Op::kSliceRows: {
        const Tensor& src = nodes_[n.in[0]].val;
        Tensor gi(src.rows(), src.cols());
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) gi(n.i0 + i, j) = g(i, j);
        accum(n.in[0], gi);
        break;
      }
      case Op::kSliceCols: {
        const Tensor& src = nodes_[n.in[0]].val;
        Tensor gi(src.rows(), src.cols());
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) gi(i, n.i0 + j) = g(i, j);
        accum(n.in[0], gi);
        break;
      }
      case Op::kSum: {
        const Tensor& src = nodes_[n.in[0]].val;
        accum(n.in[0], Tensor(src.rows(), src.cols(), g(0, 0)));
        break;
      }
      case Op::kSquaredNorm: {
        accum(n.in[0], dynlearn::scale(nodes_[n.in[0]].val, 2.0 * g(0, 0)));
        break;
      }
      case Op::kScale:
        accum(n.in[0], dynlearn::scale(g, n.factor));
        break;
      case Op::kLstm: {
        const Tensor dh = n.reverse ? reverse_rows(g) : g;
        Tensor dx, dw, dr, db;
        lstm_scan_backward(n.saved[3], nodes_[n.in[1]].val, nodes_[n.in[2]].val, n.saved[0],
                           n.saved[1], n.saved[2], dh, dx, dw, dr, db);
        accum(n.in[0], n.reverse ? reverse_rows(dx) : dx);
        accum(n.in[1], dw);
        accum(n.in[2], dr);
        accum(n.in[3], db);
        break;
      }
      case Op::kLeaf:
        break;
    }
  }

  GradMap out;
  for (size_t v = 0; v < nodes_.size(); ++v)
    if (!nodes_[v].param_name.empty() && !grads[v].empty())
      out[nodes_[v].param_name] = std::move(grads[v]);
  return out;
}

}  // namespace dynlearn
