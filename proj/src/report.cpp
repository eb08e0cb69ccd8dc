#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fracvisc/rate_harness.hpp"

namespace fracvisc {

namespace {

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("bad number '" + text + "'");
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

nlohmann::json p_json(double p) { return std::isinf(p) ? nlohmann::json("inf") : nlohmann::json(p); }
double p_from_json(const nlohmann::json& j) {
  return j.is_string() ? parse_p(j.get<std::string>()) : j.get<double>();
}

std::string gnuplot_script(const std::vector<FitVerdict>& verdicts) {
  std::ostringstream gp;
  gp << "# log-log error curves with reference slopes; run: gnuplot plots.gp\n"
     << "set datafile separator ','\n"
     << "set terminal pngcairo size 900,650\n"
     << "set logscale xy\n"
     << "set xlabel 'epsilon'\n"
     << "set ylabel 'error'\n"
     << "set key left top\n";
  int panel = 0;
  for (const auto& v : verdicts) {
    const std::string p = format_p(v.p);
    const double slope = v.target ? v.target->exponent : v.fit.exponent;
    const auto& anchor = v.fit.points.front();
    gp << "\nset output 'rates_s" << v.s << "_p" << p << ".png'\n"
       << "set title 's = " << v.s << ", p = " << p << "'\n"
       << "ref" << panel << "(x) = " << sci(anchor.second) << " * (x / " << sci(anchor.first)
       << ") ** " << slope << "\n"
       << "plot 'rates.csv' skip 1 using ((abs($1 - " << v.s << ") < 1e-12 && strcol(2) eq '"
       << (std::isinf(v.p) ? std::string("inf") : sci(v.p)) << "') ? $3 : 1/0):4 "
       << "with linespoints pt 7 title 'measured', \\\n"
       << "     ref" << panel << "(x) with lines dt 2 title 'slope " << slope << "'\n";
    ++panel;
  }
  return gp.str();
}

}  // namespace

std::string format_p(double p) {
  if (std::isinf(p)) return "inf";
  std::ostringstream out;
  out << p;
  return out.str();
}

double parse_p(std::string_view text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return kInfinity;
  const double v = parse_double(std::string(text));
  if (!(v >= 1.0)) throw std::invalid_argument("p must be >= 1");
  return v;
}

std::vector<RateRow> rate_rows(const SweepResult& result) {
  std::vector<RateRow> rows;
  const std::string kind =
      result.plan.base.hamiltonian.kind() == HamiltonianKind::zero && result.plan.base.forcing.is_zero()
          ? "exact"
          : result.plan.reference.describe();
  for (double s : result.plan.orders) {
    for (std::size_t k = 0; k < result.plan.norms.size(); ++k) {
      for (const auto& c : result.cells) {
        if (!c.ok || c.s != s) continue;
        rows.push_back({s, result.plan.norms[k], c.epsilon, c.errors[k], c.reference_norms[k], kind});
      }
    }
  }
  return rows;
}

void write_rates_csv(const std::vector<RateRow>& rows, const std::filesystem::path& path) {
  std::string text = "s,p,epsilon,error,norm,ref_kind\n";
  for (const auto& r : rows) {
    text += sci(r.s) + "," + (std::isinf(r.p) ? std::string("inf") : sci(r.p)) + "," + sci(r.epsilon) +
            "," + sci(r.error) + "," + sci(r.norm) + "," + r.ref_kind + "\n";
  }
  write_text(path, text);
}

std::vector<RateRow> read_rates_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "s,p,epsilon,error,norm,ref_kind") {
    throw std::runtime_error(path.string() + ": unexpected header '" + line + "'");
  }
  std::vector<RateRow> rows;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) {
      throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": expected 6 fields");
    }
    rows.push_back({parse_double(f[0]), parse_p(f[1]), parse_double(f[2]), parse_double(f[3]),
                    parse_double(f[4]), f[5]});
  }
  return rows;
}

nlohmann::json fit_to_json(const FitVerdict& v) {
  nlohmann::json j;
  j["s"] = v.s;
  j["p"] = p_json(v.p);
  j["model"] = to_string(v.fit.model);
  j["exponent"] = v.fit.exponent;
  j["prefactor"] = v.fit.prefactor;
  j["residual"] = v.fit.residual;
  if (v.fit.model == RateModel::power_log) j["free_slope"] = v.fit.free_slope;
  if (v.target) {
    j["target"] = {{"exponent", v.target->exponent}, {"model", to_string(v.target->model)}};
  } else {
    j["target"] = nullptr;
  }
  j["pass"] = v.pass;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& [eps, err] : v.fit.points) pts.push_back({eps, err});
  j["points"] = pts;
  return j;
}

FitVerdict fit_from_json(const nlohmann::json& j) {
  FitVerdict v;
  v.s = j.at("s").get<double>();
  v.p = p_from_json(j.at("p"));
  v.fit.model = parse_rate_model(j.at("model").get<std::string>());
  v.fit.exponent = j.at("exponent").get<double>();
  v.fit.prefactor = j.at("prefactor").get<double>();
  v.fit.residual = j.at("residual").get<double>();
  if (j.contains("free_slope")) v.fit.free_slope = j.at("free_slope").get<double>();
  if (!j.at("target").is_null()) {
    v.target = RateTarget{j["target"].at("exponent").get<double>(),
                          parse_rate_model(j["target"].at("model").get<std::string>())};
  }
  v.pass = j.at("pass").get<bool>();
  for (const auto& pt : j.at("points")) v.fit.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
  return v;
}

void emit_report(const std::vector<RateRow>& rows, const std::vector<FitVerdict>& verdicts,
                 const nlohmann::json& config_echo, const std::filesystem::path& dir,
                 const nlohmann::json& extra) {
  if (verdicts.empty()) throw std::invalid_argument("emit_report needs at least one fit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  write_rates_csv(rows, dir / "rates.csv");

  nlohmann::json report;
  report["config"] = config_echo;
  report["fits"] = nlohmann::json::array();
  for (const auto& v : verdicts) report["fits"].push_back(fit_to_json(v));
  for (const auto& [key, value] : extra.items()) report[key] = value;
  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "plots.gp", gnuplot_script(verdicts));
}

std::vector<FitVerdict> fit_rows(const std::vector<RateRow>& rows) {
  std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> tables;
  std::vector<std::pair<double, double>> order;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.s, r.p);
    if (!tables.contains(key)) order.push_back(key);
    tables[key].emplace_back(r.epsilon, r.error);
  }
  std::vector<FitVerdict> out;
  for (const auto& key : order) {
    const auto& table = tables[key];
    if (table.size() < 5) continue;
    FitVerdict v{.s = key.first, .p = key.second, .target = rate_target(key.first, key.second)};
    v.fit = fit_rate(table, v.target ? v.target->model : RateModel::power);
    v.pass = !v.target || acceptance_slope(v.fit) >= v.target->exponent - 0.1;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace fracvisc
