#include "dynlearn/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dynlearn/errors.hpp"

namespace dynlearn {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

void write_hash_line(std::ofstream& out, const std::string& hash) {
  if (!hash.empty()) out << "# config_hash=" << hash << "\n";
}

// Skips comment lines; returns false at EOF.
bool next_line(std::ifstream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    return true;
  }
  return false;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad numeric field '" + s + "' in " + path);
  }
}

json tensor_to_json(const Tensor& t) {
  std::vector<double> flat(t.data(), t.data() + t.size());
  return json{{"shape", {t.rows(), t.cols()}}, {"data", flat}};
}

Tensor tensor_from_json(const json& j) {
  const int rows = j.at("shape").at(0).get<int>();
  const int cols = j.at("shape").at(1).get<int>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<long>(flat.size()) != static_cast<long>(rows) * cols)
    throw IoError("tensor data does not match its shape");
  Tensor t(rows, cols);
  for (long i = 0; i < t.size(); ++i) t.data()[i] = flat[i];
  return t;
}

std::vector<double> flat(const Tensor& t) {
  return std::vector<double>(t.data(), t.data() + t.size());
}

Tensor unflat(const std::vector<double>& v, int rows, int cols, const char* what) {
  if (static_cast<long>(v.size()) != static_cast<long>(rows) * cols)
    throw IoError(std::string("checkpoint field ") + what + " has wrong length");
  Tensor t(rows, cols);
  for (long i = 0; i < t.size(); ++i) t.data()[i] = v[i];
  return t;
}

json load_json(const std::string& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

void save_json(const std::string& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& config_hash) {
  std::ofstream out = open_out(path);
  write_hash_line(out, config_hash);
  const int d = traj.dimension();
  out << "t";
  for (int j = 1; j <= d; ++j) out << ",x" << j;
  out << "\n";
  for (int t = 0; t < traj.length(); ++t) {
    out << fmt_g17(traj.t0 + t * traj.dt);
    for (int j = 0; j < d; ++j) out << "," << fmt_g17(traj.states[t][j]);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!next_line(in, line) || line.rfind("t,", 0) != 0)
    throw IoError("missing trajectory header in " + path);
  const int d = static_cast<int>(split_csv(line).size()) - 1;

  Trajectory traj;
  std::vector<double> times;
  while (next_line(in, line)) {
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != d + 1) throw IoError("bad row width in " + path);
    times.push_back(parse_double(fields[0], path));
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = parse_double(fields[j + 1], path);
    traj.states.push_back(std::move(x));
  }
  if (traj.states.empty()) throw IoError("empty trajectory in " + path);
  traj.t0 = times.front();
  traj.dt = times.size() > 1 ? times[1] - times[0] : 0.01;
  return traj;
}

void write_observations_csv(const std::string& path, const ObservationSeries& obs,
                            const std::string& config_hash) {
  std::ofstream out = open_out(path);
  write_hash_line(out, config_hash);
  const int d = obs.dimension();
  out << "t";
  for (int j = 1; j <= d; ++j) out << ",y" << j;
  for (int j = 1; j <= d; ++j) out << ",m" << j;
  out << "\n";
  for (int t = 0; t < obs.length(); ++t) {
    out << fmt_g17(obs.t0 + t * obs.dt);
    for (int j = 0; j < d; ++j) {
      out << ",";
      if (obs.mask.at(t, j)) out << fmt_g17(obs.values(t, j));
    }
    for (int j = 0; j < d; ++j) out << "," << (obs.mask.at(t, j) ? 1 : 0);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

ObservationSeries read_observations_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!next_line(in, line) || line.rfind("t,", 0) != 0)
    throw IoError("missing observation header in " + path);
  const int d = (static_cast<int>(split_csv(line).size()) - 1) / 2;

  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<uint8_t>> masks;
  while (next_line(in, line)) {
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != 1 + 2 * d) throw IoError("bad row width in " + path);
    times.push_back(parse_double(fields[0], path));
    std::vector<double> v(d);
    std::vector<uint8_t> m(d);
    for (int j = 0; j < d; ++j) {
      const std::string& mf = fields[1 + d + j];
      m[j] = mf == "1" ? 1 : 0;
      if (mf != "0" && mf != "1") throw IoError("bad mask field in " + path);
      v[j] = m[j] ? parse_double(fields[1 + j], path) : std::numeric_limits<double>::quiet_NaN();
      if (m[j] && fields[1 + j].empty()) throw IoError("observed entry missing value in " + path);
    }
    values.push_back(std::move(v));
    masks.push_back(std::move(m));
  }
  if (values.empty()) throw IoError("empty observation series in " + path);

  ObservationSeries obs;
  obs.t0 = times.front();
  obs.dt = times.size() > 1 ? times[1] - times[0] : 0.01;
  const int T = static_cast<int>(values.size());
  obs.values = Tensor(T, d);
  obs.mask.T = T;
  obs.mask.d = d;
  obs.mask.flags.assign(static_cast<size_t>(T) * d, 0);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j) {
      obs.values(t, j) = values[t][j];
      obs.mask.set(t, j, masks[t][j] != 0);
    }
  return obs;
}

void write_smoother_csv(const std::string& path, const SmootherResult& result, double t0,
                        double dt, const std::string& config_hash) {
  std::ofstream out = open_out(path);
  write_hash_line(out, config_hash);
  const int d = result.means.cols();
  out << "t";
  for (int j = 1; j <= d; ++j) out << ",xmean" << j;
  for (int j = 1; j <= d; ++j) out << ",xsd" << j;
  out << "\n";
  for (int t = 0; t < result.means.rows(); ++t) {
    out << fmt_g17(t0 + t * dt);
    for (int j = 0; j < d; ++j) out << "," << fmt_g17(result.means(t, j));
    for (int j = 0; j < d; ++j) out << "," << fmt_g17(result.spreads(t, j));
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_em_history_csv(const std::string& path, const std::vector<double>& loss_m,
                          const std::string& config_hash) {
  std::ofstream out = open_out(path);
  write_hash_line(out, config_hash);
  out << "iter,loss_m\n";
  for (size_t i = 0; i < loss_m.size(); ++i) out << i << "," << fmt_g17(loss_m[i]) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void write_voden_history_csv(const std::string& path, const std::vector<double>& loss_e,
                             const std::vector<double>& loss_m, const std::string& config_hash) {
  if (loss_e.size() != loss_m.size()) throw InvalidInput("voden history lengths differ");
  std::ofstream out = open_out(path);
  write_hash_line(out, config_hash);
  out << "epoch,loss_e,loss_m\n";
  for (size_t i = 0; i < loss_e.size(); ++i)
    out << i << "," << fmt_g17(loss_e[i]) << "," << fmt_g17(loss_m[i]) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void save_surrogate_checkpoint(const std::string& path, const SurrogateCheckpoint& ckpt) {
  json j{{"method", ckpt.method},
         {"config_hash", ckpt.config_hash},
         {"A", flat(ckpt.params.linear)},
         {"B", flat(ckpt.params.bilinear)},
         {"b", flat(ckpt.params.bias)},
         {"dt", ckpt.flow.dt},
         {"substeps", ckpt.flow.substeps}};
  save_json(path, j);
}

SurrogateCheckpoint load_surrogate_checkpoint(const std::string& path) {
  const json j = load_json(path);
  SurrogateCheckpoint ckpt;
  try {
    ckpt.method = j.value("method", "binn");
    ckpt.config_hash = j.value("config_hash", "");
    ckpt.params.linear = unflat(j.at("A").get<std::vector<double>>(), 3, 3, "A");
    ckpt.params.bilinear = unflat(j.at("B").get<std::vector<double>>(), 3, 6, "B");
    ckpt.params.bias = unflat(j.at("b").get<std::vector<double>>(), 1, 3, "b");
    ckpt.flow.dt = j.at("dt").get<double>();
    ckpt.flow.substeps = j.at("substeps").get<int>();
  } catch (const json::exception& e) {
    throw IoError("bad surrogate checkpoint " + path + ": " + e.what());
  }
  return ckpt;
}

void save_voden_checkpoint(const std::string& path, const VodenCheckpoint& ckpt) {
  json blocks = json::object();
  for (const auto& [name, tensor] : ckpt.phi) blocks[name] = tensor_to_json(tensor);
  json j{{"method", "voden"},
         {"config_hash", ckpt.config_hash},
         {"surrogate",
          {{"A", flat(ckpt.theta.linear)},
           {"B", flat(ckpt.theta.bilinear)},
           {"b", flat(ckpt.theta.bias)},
           {"dt", ckpt.flow.dt},
           {"substeps", ckpt.flow.substeps}}},
         {"inference", blocks},
         {"config", {{"lambda", ckpt.lambda}}}};
  save_json(path, j);
}

VodenCheckpoint load_voden_checkpoint(const std::string& path) {
  const json j = load_json(path);
  VodenCheckpoint ckpt;
  try {
    ckpt.config_hash = j.value("config_hash", "");
    const json& s = j.at("surrogate");
    ckpt.theta.linear = unflat(s.at("A").get<std::vector<double>>(), 3, 3, "A");
    ckpt.theta.bilinear = unflat(s.at("B").get<std::vector<double>>(), 3, 6, "B");
    ckpt.theta.bias = unflat(s.at("b").get<std::vector<double>>(), 1, 3, "b");
    ckpt.flow.dt = s.at("dt").get<double>();
    ckpt.flow.substeps = s.at("substeps").get<int>();
    for (const auto& [name, block] : j.at("inference").items())
      ckpt.phi.emplace(name, tensor_from_json(block));
    ckpt.lambda = j.at("config").at("lambda").get<double>();
  } catch (const json::exception& e) {
    throw IoError("bad voden checkpoint " + path + ": " + e.what());
  }
  return ckpt;
}

void save_sparse_checkpoint(const std::string& path, const SparseCheckpoint& ckpt,
                            const std::string& method) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) {
    json row = json::array();
    for (int j = 0; j < 10; ++j) row.push_back(ckpt.model.coefficients(i, j));
    rows.push_back(row);
  }
  json labels = json::array();
  for (const char* l : kSparseDictionary) labels.push_back(l);
  save_json(path, json{{"method", method},
                       {"config_hash", ckpt.config_hash},
                       {"coefficients", rows},
                       {"labels", labels},
                       {"threshold", ckpt.model.threshold},
                       {"dt", ckpt.dt}});
}

SparseCheckpoint load_sparse_checkpoint(const std::string& path) {
  const json j = load_json(path);
  SparseCheckpoint ckpt;
  try {
    ckpt.config_hash = j.value("config_hash", "");
    ckpt.model.threshold = j.at("threshold").get<double>();
    ckpt.dt = j.at("dt").get<double>();
    const json& rows = j.at("coefficients");
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 10; ++c) ckpt.model.coefficients(i, c) = rows.at(i).at(c).get<double>();
  } catch (const json::exception& e) {
    throw IoError("bad sparse checkpoint " + path + ": " + e.what());
  }
  return ckpt;
}

void save_analog_checkpoint(const std::string& path, const AnalogCheckpoint& ckpt) {
  save_json(path, json{{"method", "af"},
                       {"config_hash", ckpt.config_hash},
                       {"k", ckpt.k},
                       {"dt", ckpt.dt},
                       {"rows", ckpt.catalog.states.rows()},
                       {"states", flat(ckpt.catalog.states)},
                       {"successors", flat(ckpt.catalog.successors)}});
}

AnalogCheckpoint load_analog_checkpoint(const std::string& path) {
  const json j = load_json(path);
  AnalogCheckpoint ckpt;
  try {
    ckpt.config_hash = j.value("config_hash", "");
    ckpt.k = j.at("k").get<int>();
    ckpt.dt = j.at("dt").get<double>();
    const int rows = j.at("rows").get<int>();
    ckpt.catalog.states = unflat(j.at("states").get<std::vector<double>>(), rows, 3, "states");
    ckpt.catalog.successors =
        unflat(j.at("successors").get<std::vector<double>>(), rows, 3, "successors");
  } catch (const json::exception& e) {
    throw IoError("bad analog checkpoint " + path + ": " + e.what());
  }
  return ckpt;
}

std::string checkpoint_method(const std::string& path) {
  return load_json(path).value("method", "");
}

std::string checkpoint_config_hash(const std::string& path) {
  return load_json(path).value("config_hash", "");
}

void write_metrics_json(const std::string& path, const MetricsReport& r) {
  json j{{"method", r.method},
         {"scenario", r.scenario},
         {"noise_var", r.noise_var},
         {"rmse_h", r.rmse_h},
         {"rmse_4h", r.rmse_4h},
         {"delta", r.delta},
         {"n_initials", r.n_initials},
         {"n_failed", r.n_failed},
         {"lambda1", r.lambda1},
         {"lyapunov_steps", r.lyapunov_steps},
         {"renorm_interval", r.renorm_interval},
         {"config_hash", r.config_hash}};
  save_json(path, j);
}

MetricsReport read_metrics_json(const std::string& path) {
  const json j = load_json(path);
  MetricsReport r;
  auto num = [&](const char* key) {
    const json& v = j.at(key);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  try {
    r.method = j.at("method").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.noise_var = num("noise_var");
    r.rmse_h = num("rmse_h");
    r.rmse_4h = num("rmse_4h");
    r.delta = num("delta");
    r.n_initials = j.at("n_initials").get<int>();
    r.n_failed = j.at("n_failed").get<int>();
    r.lambda1 = num("lambda1");
    r.lyapunov_steps = j.at("lyapunov_steps").get<int>();
    r.renorm_interval = j.at("renorm_interval").get<int>();
    r.config_hash = j.value("config_hash", "");
  } catch (const json::exception& e) {
    throw IoError("bad metrics file " + path + ": " + e.what());
  }
  return r;
}

}  // namespace dynlearn
