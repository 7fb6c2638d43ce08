#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dynlearn/tensor.hpp"

namespace dynlearn {

using GradMap = std::map<std::string, Tensor>;

// Define-by-run reverse-mode tape over Tensor values. Forward calls record
// one node per primitive; backward(loss) walks the record once and returns
// gradients for every named parameter the loss actually touched.
//
// Everything is double precision. Shapes are checked on entry and shape
// errors name the offending op.
class Tape {
 public:
  using Var = int;

  // Leaves. Constants never receive gradients; params are collected by name.
  Var constant(Tensor value);
  Var param(const std::string& name, Tensor value);

  Var add(Var a, Var b);
  Var add_row(Var a, Var bias);  // bias 1 x cols broadcast over rows
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, int r0, int r1);  // half-open [r0, r1)
  Var slice_cols(Var a, int c0, int c1);
  Var sum(Var a);           // 1x1
  Var squared_norm(Var a);  // 1x1
  Var scale(Var a, double s);

  // One direction of a standard LSTM over the whole sequence:
  //   seq T x in, w 4h x in, r 4h x h, bias 1 x 4h, gate order (i, f, g, o),
  //   zero initial hidden and cell state. Output rows stay aligned with input
  //   rows; reverse = true consumes the sequence back to front.
  Var lstm(Var seq, Var w, Var r, Var bias, bool reverse);

  const Tensor& value(Var v) const { return nodes_[v].val; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  /// Reverse pass from a scalar loss node. Throws InvalidInput if the node is
  /// not 1x1. Parameters unreachable from the loss are absent from the map.
  GradMap backward(Var loss) const;

 private:
  enum class Op : uint8_t {
    kLeaf,
    kAdd,
    kAddRow,
    kSub,
    kMul,
    kMatMul,
    kTranspose,
    kTanh,
    kSigmoid,
    kConcatCols,
    kSliceRows,
    kSliceCols,
    kSum,
    kSquaredNorm,
    kScale,
    kLstm,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::vector<Var> in;
    Tensor val;
    double factor = 0.0;  // kScale
    int i0 = 0, i1 = 0;   // slice bounds
    bool reverse = false; // kLstm
    bool needs_grad = false;
    std::vector<Tensor> saved;  // kLstm intermediates
    std::string param_name;     // nonempty for named parameters
  };

  Var push(Node n);
  bool any_needs_grad(const std::vector<Var>& in) const;

  std::vector<Node> nodes_;
};

}  // namespace dynlearn
