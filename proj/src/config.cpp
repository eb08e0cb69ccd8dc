#include "fracvisc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fracvisc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::string shortest(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + shortest(values[i]);
  return out;
}

nlohmann::json number_json(double v) { return std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v); }

// Parser state for one config text; errors carry the key's line.
class Reader {
 public:
  Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const auto it = lines_.find(key);
    throw ConfigError(key, it == lines_.end() ? 0 : it->second,
                      source_ + ":" + std::to_string(it == lines_.end() ? 0 : it->second) + ": " +
                          key + ": " + message);
  }

  void read(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    const auto& known = config_keys();
    while (std::getline(in, raw)) {
      ++number;
      const auto hash = raw.find('#');
      const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("", number,
                          source_ + ":" + std::to_string(number) + ": expected 'key = value'");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw ConfigError(key, number,
                          source_ + ":" + std::to_string(number) + ": unknown key '" + key + "'");
      }
      if (values_.contains(key)) {
        throw ConfigError(key, number, source_ + ":" + std::to_string(number) + ": duplicate key '" +
                                           key + "' (first on line " +
                                           std::to_string(lines_[key]) + ")");
      }
      if (value.empty()) {
        throw ConfigError(key, number, source_ + ":" + std::to_string(number) + ": " + key +
                                           ": empty value");
      }
      values_[key] = value;
      lines_[key] = number;
    }
  }

  const std::string* get(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  double number(const std::string& key, const std::string& text) const {
    double v = 0.0;
    const std::string t = trim(text);
    if (t == "inf") return kInfinity;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty()) {
      fail(key, "'" + t + "' is not a number");
    }
    return v;
  }

  long integer(const std::string& key, const std::string& text) const {
    long v = 0;
    const std::string t = trim(text);
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty()) {
      fail(key, "'" + t + "' is not an integer");
    }
    return v;
  }

  std::vector<double> numbers(const std::string& key, const std::string& text) const {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(number(key, item));
    if (out.empty()) fail(key, "empty list");
    return out;
  }

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
};

}  // namespace

ConfigError::ConfigError(const std::string& key, int line, const std::string& message)
    : std::runtime_error(message), key_(key), line_(line) {}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "dim",       "n_points", "s_list",         "epsilon_list", "hamiltonian",  "u0",
      "forcing",   "T",        "p_list",         "snapshot_count", "dt_cfl",     "reference",
      "output_dir", "seed",    "scheme",         "splitting_dt", "q_list",       "pairs",
      "eta_list"};
  return keys;
}

ExperimentConfig::ExperimentConfig() {
  for (int i = 0; i < 7; ++i) epsilon_list.push_back(0.0625 / std::pow(2.0, i));
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& source) {
  Reader r(source);
  r.read(text);
  ExperimentConfig c;

  if (auto v = r.get("dim")) {
    const long d = r.integer("dim", *v);
    if (d != 1 && d != 2) r.fail("dim", "must be 1 or 2");
    c.dim = static_cast<int>(d);
  }
  if (auto v = r.get("n_points")) {
    if (*v == "auto") {
      c.n_points = 0;
    } else {
      const long n = r.integer("n_points", *v);
      if (n < 8 || n > (1 << 20) || (n & (n - 1)) != 0) {
        r.fail("n_points", "must be 'auto' or a power of two in [8, 2^20]");
      }
      c.n_points = static_cast<int>(n);
    }
  }
  if (auto v = r.get("s_list")) {
    c.s_list = r.numbers("s_list", *v);
    for (double s : c.s_list) {
      if (!(s > 0.0 && s <= 1.0)) r.fail("s_list", "values must lie in (0, 1]");
    }
  }
  if (auto v = r.get("epsilon_list")) {
    if (v->starts_with("geometric:")) {
      const auto parts = split_list(v->substr(10));
      if (parts.size() != 3) r.fail("epsilon_list", "expected geometric:start,ratio,count");
      const double start = r.number("epsilon_list", parts[0]);
      const double ratio = r.number("epsilon_list", parts[1]);
      const long count = r.integer("epsilon_list", parts[2]);
      if (!(start > 0.0) || !(ratio > 0.0) || ratio == 1.0 || count < 1 || count > 64) {
        r.fail("epsilon_list", "geometric needs start > 0, ratio > 0 and != 1, 1 <= count <= 64");
      }
      // ratio > 1 divides, ratio < 1 multiplies: both give a decreasing list.
      const double factor = ratio > 1.0 ? 1.0 / ratio : ratio;
      c.epsilon_list.clear();
      for (long i = 0; i < count; ++i) c.epsilon_list.push_back(start * std::pow(factor, i));
    } else {
      c.epsilon_list = r.numbers("epsilon_list", *v);
    }
    for (std::size_t i = 0; i < c.epsilon_list.size(); ++i) {
      if (!(c.epsilon_list[i] > 0.0) || !std::isfinite(c.epsilon_list[i])) {
        r.fail("epsilon_list", "values must be positive and finite");
      }
      if (i > 0 && !(c.epsilon_list[i] < c.epsilon_list[i - 1])) {
        r.fail("epsilon_list", "values must be strictly decreasing");
      }
    }
  }
  if (auto v = r.get("hamiltonian")) {
    try {
      const Hamiltonian H = Hamiltonian::parse(*v);
      if (H.kind() == HamiltonianKind::anisotropic_quadratic &&
          H.parameters().size() != static_cast<std::size_t>(c.dim)) {
        r.fail("hamiltonian", "needs one mass per dimension");
      }
    } catch (const std::invalid_argument& e) {
      r.fail("hamiltonian", e.what());
    }
    c.hamiltonian = *v;
  }
  if (auto v = r.get("u0")) {
    try {
      (void)initial_datum(*v, c.dim);
    } catch (const std::invalid_argument& e) {
      r.fail("u0", e.what());
    }
    c.u0 = *v;
  } else if (c.dim == 2) {
    c.u0 = "cos2d";
  }
  if (auto v = r.get("forcing")) {
    try {
      (void)forcing_preset(*v);
    } catch (const std::invalid_argument& e) {
      r.fail("forcing", e.what());
    }
    c.forcing = *v;
  }
  if (auto v = r.get("T")) {
    c.T = r.number("T", *v);
    if (!(c.T > 0.0) || !std::isfinite(c.T)) r.fail("T", "must be positive and finite");
  }
  if (auto v = r.get("p_list")) {
    c.p_list = r.numbers("p_list", *v);
    for (double p : c.p_list) {
      if (!(p >= 1.0)) r.fail("p_list", "values must be >= 1 or inf");
    }
  }
  if (auto v = r.get("snapshot_count")) {
    const long k = r.integer("snapshot_count", *v);
    if (k < 1 || k > 4096) r.fail("snapshot_count", "must lie in [1, 4096]");
    c.snapshot_count = static_cast<int>(k);
  }
  if (auto v = r.get("dt_cfl")) {
    c.dt_cfl = r.number("dt_cfl", *v);
    if (!(c.dt_cfl > 0.0 && c.dt_cfl <= 1.0)) r.fail("dt_cfl", "must lie in (0, 1]");
  }
  if (auto v = r.get("reference")) {
    try {
      (void)ReferenceSpec::parse(*v);
    } catch (const std::invalid_argument& e) {
      r.fail("reference", e.what());
    }
    c.reference = *v;
  }
  if (auto v = r.get("output_dir")) c.output_dir = *v;
  if (auto v = r.get("seed")) {
    const long seed = r.integer("seed", *v);
    if (seed < 0) r.fail("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  if (auto v = r.get("scheme")) {
    try {
      (void)parse_scheme(*v);
    } catch (const std::invalid_argument& e) {
      r.fail("scheme", e.what());
    }
    c.scheme = *v;
  }
  if (auto v = r.get("splitting_dt")) {
    c.splitting_dt = r.number("splitting_dt", *v);
    if (!(c.splitting_dt > 0.0) || !std::isfinite(c.splitting_dt)) {
      r.fail("splitting_dt", "must be positive");
    }
  }
  if (auto v = r.get("q_list")) {
    c.q_list = r.numbers("q_list", *v);
    for (double q : c.q_list) {
      if (!(q > 1.0) || !std::isfinite(q)) r.fail("q_list", "values must be finite and > 1");
    }
  }
  if (auto v = r.get("pairs")) {
    c.pairs.clear();
    for (const auto& item : split_list(*v)) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) r.fail("pairs", "expected eps:eta entries");
      const double e = r.number("pairs", item.substr(0, colon));
      const double h = r.number("pairs", item.substr(colon + 1));
      if (!(e > 0.0) || !(h > 0.0) || e == h || !std::isfinite(e) || !std::isfinite(h)) {
        r.fail("pairs", "viscosities must be positive, finite and distinct");
      }
      c.pairs.emplace_back(e, h);
    }
  }
  if (auto v = r.get("eta_list")) {
    c.eta_list = r.numbers("eta_list", *v);
    for (double e : c.eta_list) {
      if (!(e > 0.0) || !std::isfinite(e)) r.fail("eta_list", "values must be positive");
    }
  }

  // Cross-key checks.
  if (ReferenceSpec::parse(c.reference).kind == ReferenceKind::hopf_lax &&
      !forcing_preset(c.forcing).is_zero()) {
    r.fail(r.get("reference") ? "reference" : "forcing", "the hopf_lax reference requires zero forcing");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, path.string() + ": cannot read config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  std::string pair_text;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pair_text += (i ? "," : "") + shortest(pairs[i].first) + ":" + shortest(pairs[i].second);
  }
  out << "dim = " << dim << "\n"
      << "n_points = " << (n_points ? std::to_string(n_points) : std::string("auto")) << "\n"
      << "s_list = " << join(s_list) << "\n"
      << "epsilon_list = " << join(epsilon_list) << "\n"
      << "hamiltonian = " << hamiltonian << "\n"
      << "u0 = " << u0 << "\n"
      << "forcing = " << forcing << "\n"
      << "T = " << shortest(T) << "\n"
      << "p_list = " << join(p_list) << "\n"
      << "snapshot_count = " << snapshot_count << "\n"
      << "dt_cfl = " << shortest(dt_cfl) << "\n"
      << "reference = " << reference << "\n"
      << "output_dir = " << output_dir << "\n"
      << "seed = " << seed << "\n"
      << "scheme = " << scheme << "\n"
      << "splitting_dt = " << shortest(splitting_dt) << "\n"
      << "q_list = " << join(q_list) << "\n"
      << "pairs = " << pair_text << "\n"
      << "eta_list = " << join(eta_list) << "\n";
  return out.str();
}

nlohmann::json ExperimentConfig::echo() const {
  nlohmann::json j;
  auto list = [](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(number_json(x));
    return a;
  };
  j["dim"] = dim;
  j["n_points"] = n_points ? nlohmann::json(n_points) : nlohmann::json("auto");
  j["s_list"] = list(s_list);
  j["epsilon_list"] = list(epsilon_list);
  j["hamiltonian"] = hamiltonian;
  j["u0"] = u0;
  j["forcing"] = forcing;
  j["T"] = T;
  j["p_list"] = list(p_list);
  j["snapshot_count"] = snapshot_count;
  j["dt_cfl"] = dt_cfl;
  j["reference"] = reference;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["scheme"] = scheme;
  j["splitting_dt"] = splitting_dt;
  j["q_list"] = list(q_list);
  nlohmann::json pj = nlohmann::json::array();
  for (const auto& [e, h] : pairs) pj.push_back({e, h});
  j["pairs"] = pj;
  j["eta_list"] = list(eta_list);
  return j;
}

Hamiltonian ExperimentConfig::make_hamiltonian() const { return Hamiltonian::parse(hamiltonian); }

SolverOptions ExperimentConfig::solver_options() const {
  return {.scheme = parse_scheme(scheme), .dt_cfl = dt_cfl, .splitting_dt = splitting_dt};
}

std::vector<double> ExperimentConfig::snapshot_times() const { return uniform_times(T, snapshot_count); }

ProblemSpec ExperimentConfig::problem(double s, double epsilon, int n) const {
  if (n == 0) n = n_points ? n_points : resolution_rule(epsilon, s);
  return make_problem(TorusGrid(dim, n), s, epsilon, make_hamiltonian(), initial_datum(u0, dim),
                      forcing_preset(forcing), T);
}

SweepPlan ExperimentConfig::sweep_plan() const {
  // The base grid only fixes the dimension when n_points is automatic.
  SweepPlan plan{.base = problem(s_list.front(), epsilon_list.front(), n_points ? n_points : 64)};
  plan.epsilons = epsilon_list;
  plan.orders = s_list;
  plan.norms = p_list;
  plan.reference = ReferenceSpec::parse(reference);
  plan.times = snapshot_times();
  plan.solver = solver_options();
  plan.n_points = n_points;
  return plan;
}

}  // namespace fracvisc
