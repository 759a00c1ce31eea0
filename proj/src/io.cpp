#include "mspr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "mspr/format.hpp"

namespace mspr {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fixed9(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", t);
  return buf;
}

std::string shortest(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// JSON carries NaN as null; these two keep the conversion in one place.
ordered_json jnum(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double dnum(const ordered_json& j) {
  if (j.is_null()) return kNaN;
  return j.get<double>();
}

ordered_json vec_json(const std::vector<double>& v) {
  ordered_json out = ordered_json::array();
  for (const double x : v) out.push_back(jnum(x));
  return out;
}

std::vector<double> vec_from(const ordered_json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(dnum(x));
  return out;
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json out = ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(jnum(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

Matrix matrix_from(const ordered_json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows > 0 ? j.at(0).size() : 0;
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j.at(i).size() != cols) throw ValidationError("matrix rows have unequal lengths");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = dnum(j.at(i).at(c));
  }
  return m;
}

ordered_json params_json(const Params& params) {
  const std::size_t p = params.neuron_count();
  ordered_json signs = ordered_json::array();
  for (std::size_t i = 0; i < p; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < p; ++j) row.push_back(params.signs(i, j));
    signs.push_back(std::move(row));
  }
  return ordered_json{{"base_up", vec_json(params.base_up)},
                      {"base_down", vec_json(params.base_down)},
                      {"gamma", matrix_json(params.gamma)},
                      {"signs", std::move(signs)}};
}

Params params_from(const ordered_json& j, const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "base_up" && key != "base_down" && key != "gamma" && key != "signs")
      throw ValidationError(format(context, ": unknown params field \"", key, "\""));
  }
  if (!j.contains("base_up") || !j.contains("base_down"))
    throw ValidationError(format(context, ": params need base_up and base_down"));

  Params params;
  params.base_up = j.at("base_up").get<std::vector<double>>();
  params.base_down = j.at("base_down").get<std::vector<double>>();
  const std::size_t p = params.base_up.size();
  params.gamma = Matrix(p, p);
  params.signs = SignMatrix(p);
  if (j.contains("gamma")) params.gamma = matrix_from(j.at("gamma"));
  if (j.contains("signs")) {
    const auto& signs = j.at("signs");
    if (signs.size() != p) throw ValidationError(format(context, ": signs must be ", p, "x", p));
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t c = i + 1; c < p; ++c) {
        const int a = signs.at(i).at(c).get<int>();
        const int b = signs.at(c).at(i).get<int>();
        if (a != 0 || b != 0) params.signs.set_pair(i, c, a, b);
      }
  }
  const std::vector<std::string> problems = validate(params);
  if (!problems.empty()) {
    std::string joined;
    for (const auto& msg : problems) joined += "\n  " + msg;
    throw ValidationError(format(context, ": invalid params:", joined));
  }
  return params;
}

ordered_json config_json(const RunConfig& config) {
  ordered_json out;
  out["T"] = config.duration ? ordered_json(*config.duration) : ordered_json(nullptr);
  out["trials"] = config.n_trials;
  out["seed"] = config.seed;
  out["bootstrap"] = config.bootstrap;
  out["n_perm"] = config.n_perm;
  out["alpha"] = config.alpha;
  out["threshold_gamma"] = config.threshold_gamma;
  out["threads"] = config.threads;
  out["params"] = config.params ? params_json(*config.params) : ordered_json(nullptr);
  return out;
}

RunConfig config_from(const ordered_json& j, const std::string& context) {
  if (!j.is_object()) throw ValidationError(format(context, ": config must be a JSON object"));
  RunConfig config;
  for (const auto& [key, value] : j.items()) {
    if (key == "T") {
      if (!value.is_null()) config.duration = value.get<double>();
    } else if (key == "trials") {
      config.n_trials = value.get<std::size_t>();
    } else if (key == "seed") {
      config.seed = value.get<std::uint64_t>();
    } else if (key == "params") {
      if (!value.is_null()) config.params = params_from(value, context);
    } else if (key == "bootstrap") {
      config.bootstrap = value.get<std::size_t>();
    } else if (key == "n_perm") {
      config.n_perm = value.get<std::size_t>();
    } else if (key == "alpha") {
      config.alpha = value.get<double>();
    } else if (key == "threshold_gamma") {
      config.threshold_gamma = value.get<bool>();
    } else if (key == "threads") {
      config.threads = value.get<int>();
    } else {
      throw ValidationError(format(context, ": unknown config field \"", key, "\""));
    }
  }
  if (config.duration && !(*config.duration > 0.0 && std::isfinite(*config.duration)))
    throw ValidationError(format(context, ": T must be positive and finite"));
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw ValidationError(format(context, ": alpha must lie in (0,1)"));
  if (config.bootstrap < 2) throw ValidationError(format(context, ": bootstrap must be >= 2"));
  if (config.n_perm == 0) throw ValidationError(format(context, ": n_perm must be positive"));
  if (config.threads < 0) throw ValidationError(format(context, ": threads must be >= 0"));
  return config;
}

ordered_json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(format("cannot open ", path));
  try {
    return ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw ValidationError(format(path, ": ", e.what()));
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(format("cannot open ", path, " for writing"));
  out << content;
  if (!out) throw IoError(format("write failed for ", path));
}

void dump_json_file(const ordered_json& j, const std::string& path) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace

SpikeDataset read_spikes(const std::string& path, std::optional<double> duration) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(format("cannot open ", path));

  struct Row {
    std::size_t trial, neuron;
    double time;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::optional<double> meta_T;
  std::optional<std::size_t> meta_trials, meta_neurons;
  bool header_seen = false;
  std::size_t max_trial = 0, max_neuron = 0;
  bool any_row = false;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string body = line.substr(1);
      const std::size_t start = body.find_first_not_of(' ');
      if (start == std::string::npos) continue;
      body = body.substr(start);
      const std::size_t eq = body.find('=');
      if (eq == std::string::npos) continue;  // free-form comment
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      try {
        if (key == "T") meta_T = std::stod(value);
        else if (key == "trials") meta_trials = std::stoull(value);
        else if (key == "neurons") meta_neurons = std::stoull(value);
      } catch (const std::exception&) {
        throw ValidationError(format(path, ":", lineno, ": bad metadata value \"", value, "\""));
      }
      continue;
    }
    if (!header_seen) {
      if (line != "trial,neuron,time")
        throw ValidationError(format(path, ":", lineno, ": expected header \"trial,neuron,time\""));
      header_seen = true;
      continue;
    }

    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
      throw ValidationError(format(path, ":", lineno, ": expected 3 comma-separated fields"));

    Row row{0, 0, 0.0, lineno};
    const char* begin = line.data();
    auto parse_index = [&](std::size_t from, std::size_t to, std::size_t& out) {
      const auto [ptr, ec] = std::from_chars(begin + from, begin + to, out);
      return ec == std::errc{} && ptr == begin + to;
    };
    auto parse_time = [&](std::size_t from, std::size_t to, double& out) {
      const auto [ptr, ec] = std::from_chars(begin + from, begin + to, out);
      return ec == std::errc{} && ptr == begin + to;
    };
    if (!parse_index(0, c1, row.trial))
      throw ValidationError(format(path, ":", lineno, ": bad trial id"));
    if (!parse_index(c1 + 1, c2, row.neuron))
      throw ValidationError(format(path, ":", lineno, ": bad neuron id"));
    if (!parse_time(c2 + 1, line.size(), row.time) || !std::isfinite(row.time))
      throw ValidationError(format(path, ":", lineno, ": bad spike time"));

    max_trial = std::max(max_trial, row.trial);
    max_neuron = std::max(max_neuron, row.neuron);
    any_row = true;
    rows.push_back(row);
  }
  if (in.bad()) throw IoError(format("read failed for ", path));
  if (!header_seen) throw ValidationError(format(path, ": missing \"trial,neuron,time\" header"));

  double T = 0.0;
  if (duration) T = *duration;
  else if (meta_T) T = *meta_T;
  else throw ValidationError(format(path, ": no trial duration (need config T or \"# T=\" line)"));
  if (!(T > 0.0) || !std::isfinite(T))
    throw ValidationError(format(path, ": trial duration must be positive and finite"));

  const std::size_t n_trials = meta_trials ? *meta_trials : (any_row ? max_trial + 1 : 0);
  const std::size_t p = meta_neurons ? *meta_neurons : (any_row ? max_neuron + 1 : 0);
  for (const Row& row : rows) {
    if (row.trial >= n_trials)
      throw ValidationError(format(path, ":", row.line, ": trial id ", row.trial,
                                   " outside declared trial count ", n_trials));
    if (row.neuron >= p)
      throw ValidationError(format(path, ":", row.line, ": neuron id ", row.neuron,
                                   " outside declared neuron count ", p));
    if (!(row.time > 0.0) || row.time > T)
      throw ValidationError(format(path, ":", row.line, ": spike time ", row.time,
                                   " outside (0, ", T, "]"));
  }

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.trial != b.trial) return a.trial < b.trial;
    if (a.neuron != b.neuron) return a.neuron < b.neuron;
    if (a.time != b.time) return a.time < b.time;
    return a.line < b.line;
  });
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const Row& a = rows[k - 1];
    const Row& b = rows[k];
    if (a.trial == b.trial && a.neuron == b.neuron && a.time == b.time)
      throw ValidationError(format(path, ":", b.line, ": duplicate spike (trial ", b.trial,
                                   ", neuron ", b.neuron, ", time ", fixed9(b.time),
                                   "), first seen on line ", a.line));
  }

  SpikeDataset data;
  data.p = p;
  data.duration = T;
  data.spikes.assign(n_trials, std::vector<std::vector<double>>(p));
  for (const Row& row : rows) data.spikes[row.trial][row.neuron].push_back(row.time);
  return data;
}

void write_spikes(const SpikeDataset& data, const std::string& path) {
  std::ostringstream out;
  out << "# T=" << shortest(data.duration) << "\n";
  out << "# trials=" << data.n_trials() << "\n";
  out << "# neurons=" << data.p << "\n";
  out << "trial,neuron,time\n";
  for (std::size_t r = 0; r < data.n_trials(); ++r)
    for (std::size_t i = 0; i < data.p; ++i)
      for (const double t : data.spikes[r][i])
        out << r << ',' << i << ',' << fixed9(t) << "\n";
  write_text_file(path, out.str());
}

RunConfig read_config(const std::string& path) {
  const ordered_json j = parse_json_file(path);
  try {
    return config_from(j, path);
  } catch (const ordered_json::exception& e) {
    throw ValidationError(format(path, ": ", e.what()));
  }
}

void write_params_echo(const RunConfig& config, const std::string& path) {
  ordered_json j;
  j["artifact"] = "mspr";
  j["version"] = kVersion;
  j["report"] = "simulate";
  j["seed"] = config.seed;
  j["config"] = config_json(config);
  dump_json_file(j, path);
}

void write_fit_report(const FitResult& fit, const BootstrapResult& boot,
                      const RunConfig& config, const std::string& path) {
  ordered_json j;
  j["artifact"] = "mspr";
  j["version"] = kVersion;
  j["report"] = "fit";
  j["seed"] = config.seed;
  j["covariance_denominator"] = "unbiased";
  j["config"] = config_json(config);
  j["T"] = fit.duration;
  j["n_trials"] = fit.n_trials;
  j["p"] = fit.p;

  ordered_json marginal_up = ordered_json::array(), marginal_down = ordered_json::array();
  for (const RatePair& r : fit.marginal) {
    marginal_up.push_back(jnum(r.up));
    marginal_down.push_back(jnum(r.down));
  }
  j["marginal_up"] = std::move(marginal_up);
  j["marginal_down"] = std::move(marginal_down);
  j["base_up"] = vec_json(fit.base_up);
  j["base_down"] = vec_json(fit.base_down);
  j["gamma"] = matrix_json(fit.gamma);
  j["sign_product"] = matrix_json(fit.sign_product);
  ordered_json signs = ordered_json::array();
  for (std::size_t i = 0; i < fit.p; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t c = 0; c < fit.p; ++c) row.push_back(fit.signs(i, c));
    signs.push_back(std::move(row));
  }
  j["signs"] = std::move(signs);
  j["count_covariance"] = matrix_json(fit.count_cov);

  ordered_json optimizer = ordered_json::array();
  for (const OptimizerDiag& d : fit.optimizer)
    optimizer.push_back(ordered_json{{"iterations", d.iterations},
                                     {"converged", d.converged},
                                     {"loglik", jnum(d.loglik)},
                                     {"grad_norm", jnum(d.grad_norm)},
                                     {"at_lower_bound", d.at_lower_bound},
                                     {"degenerate", d.degenerate}});
  j["optimizer"] = std::move(optimizer);

  ordered_json warnings = ordered_json::array();
  for (std::size_t i = 0; i < fit.p; ++i) {
    if (!(fit.marginal[i].up > fit.marginal[i].down))
      warnings.push_back(format("neuron ", i, ": fitted up rate <= down rate; model ISI moments undefined"));
    if (!fit.optimizer[i].converged)
      warnings.push_back(format("neuron ", i, ": optimizer did not converge"));
    if (fit.optimizer[i].degenerate)
      warnings.push_back(format("neuron ", i, ": no spikes; rates pinned to the box face"));
  }
  if (boot.high_failure_rate)
    warnings.push_back(format("bootstrap: ", boot.failed, " of ", boot.requested,
                              " replicates failed to converge"));
  j["warnings"] = std::move(warnings);

  ordered_json rep_up = ordered_json::array(), rep_down = ordered_json::array(),
               rep_gamma = ordered_json::array();
  for (const auto& marginal : boot.rep_marginal) {
    ordered_json up = ordered_json::array(), down = ordered_json::array();
    for (const RatePair& r : marginal) {
      up.push_back(jnum(r.up));
      down.push_back(jnum(r.down));
    }
    rep_up.push_back(std::move(up));
    rep_down.push_back(std::move(down));
  }
  for (const Matrix& g : boot.rep_gamma) rep_gamma.push_back(matrix_json(g));
  j["bootstrap"] = ordered_json{{"requested", boot.requested},
                                {"failed", boot.failed},
                                {"high_failure_rate", boot.high_failure_rate},
                                {"se_marginal_up", vec_json(boot.se_marginal_up)},
                                {"se_marginal_down", vec_json(boot.se_marginal_down)},
                                {"se_base_up", vec_json(boot.se_base_up)},
                                {"se_base_down", vec_json(boot.se_base_down)},
                                {"se_gamma", matrix_json(boot.se_gamma)},
                                {"replicates", ordered_json{{"marginal_up", std::move(rep_up)},
                                                            {"marginal_down", std::move(rep_down)},
                                                            {"gamma", std::move(rep_gamma)}}}};
  dump_json_file(j, path);
}

FitReport read_fit_report(const std::string& path) {
  const ordered_json j = parse_json_file(path);
  FitReport report;
  try {
    if (j.at("report").get<std::string>() != "fit")
      throw ValidationError(format(path, ": not a fit report"));
    FitResult& fit = report.fit;
    fit.p = j.at("p").get<std::size_t>();
    fit.duration = j.at("T").get<double>();
    fit.n_trials = j.at("n_trials").get<std::size_t>();
    const std::vector<double> up = vec_from(j.at("marginal_up"));
    const std::vector<double> down = vec_from(j.at("marginal_down"));
    if (up.size() != fit.p || down.size() != fit.p)
      throw ValidationError(format(path, ": marginal rate arrays must have length p"));
    for (std::size_t i = 0; i < fit.p; ++i) fit.marginal.push_back({up[i], down[i]});
    fit.base_up = vec_from(j.at("base_up"));
    fit.base_down = vec_from(j.at("base_down"));
    fit.gamma = matrix_from(j.at("gamma"));
    fit.sign_product = matrix_from(j.at("sign_product"));
    fit.count_cov = matrix_from(j.at("count_covariance"));
    fit.signs = SignMatrix(fit.p);
    const auto& signs = j.at("signs");
    for (std::size_t i = 0; i < fit.p; ++i)
      for (std::size_t c = i + 1; c < fit.p; ++c) {
        const int a = signs.at(i).at(c).get<int>();
        const int b = signs.at(c).at(i).get<int>();
        if (a != 0 || b != 0) fit.signs.set_pair(i, c, a, b);
      }
    for (const auto& d : j.at("optimizer"))
      fit.optimizer.push_back({d.at("iterations").get<int>(), d.at("converged").get<bool>(),
                               dnum(d.at("loglik")), dnum(d.at("grad_norm")),
                               d.at("at_lower_bound").get<bool>(), d.at("degenerate").get<bool>()});

    const ordered_json& b = j.at("bootstrap");
    BootstrapResult& boot = report.boot;
    boot.requested = b.at("requested").get<std::size_t>();
    boot.failed = b.at("failed").get<std::size_t>();
    boot.high_failure_rate = b.at("high_failure_rate").get<bool>();
    boot.se_marginal_up = vec_from(b.at("se_marginal_up"));
    boot.se_marginal_down = vec_from(b.at("se_marginal_down"));
    boot.se_base_up = vec_from(b.at("se_base_up"));
    boot.se_base_down = vec_from(b.at("se_base_down"));
    boot.se_gamma = matrix_from(b.at("se_gamma"));
    const ordered_json& reps = b.at("replicates");
    const auto& rep_up = reps.at("marginal_up");
    const auto& rep_down = reps.at("marginal_down");
    for (std::size_t r = 0; r < rep_up.size(); ++r) {
      std::vector<RatePair> marginal;
      const std::vector<double> ru = vec_from(rep_up.at(r));
      const std::vector<double> rd = vec_from(rep_down.at(r));
      for (std::size_t i = 0; i < ru.size(); ++i) marginal.push_back({ru[i], rd[i]});
      boot.rep_marginal.push_back(std::move(marginal));
    }
    for (const auto& g : reps.at("gamma")) boot.rep_gamma.push_back(matrix_from(g));
    report.config = config_from(j.at("config"), path);
  } catch (const ordered_json::exception& e) {
    throw ValidationError(format(path, ": ", e.what()));
  }
  return report;
}

void write_diagnostics_report(const DiagnosticsReport& report, const RunConfig& config,
                              std::uint64_t seed, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(format("cannot create directory ", out_dir, ": ", ec.message()));
  const auto in_dir = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  auto moments_json = [](const std::vector<IsiMoments>& rows) {
    ordered_json out = ordered_json::array();
    for (const IsiMoments& m : rows)
      out.push_back(ordered_json{{"defined", m.defined},
                                 {"mean", jnum(m.mean)},
                                 {"variance", jnum(m.variance)},
                                 {"se_mean", jnum(m.se_mean)},
                                 {"se_variance", jnum(m.se_variance)}});
    return out;
  };

  ordered_json j;
  j["artifact"] = "mspr";
  j["version"] = kVersion;
  j["report"] = "diagnose";
  j["seed"] = seed;
  j["config"] = config_json(config);
  j["p"] = report.p;
  j["alpha"] = report.alpha;
  j["observed_isi"] = moments_json(report.observed);
  j["model_isi"] = moments_json(report.model);
  j["correlation"] = matrix_json(report.correlation);
  j["p_value"] = matrix_json(report.p_value);
  ordered_json significant = ordered_json::array();
  for (std::size_t i = 0; i < report.p; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t c = 0; c < report.p; ++c) {
      const double pv = report.p_value(i, c);
      row.push_back(std::isnan(pv) ? ordered_json(nullptr) : ordered_json(pv <= report.alpha));
    }
    significant.push_back(std::move(row));
  }
  j["significant"] = std::move(significant);
  ordered_json pp = ordered_json::array();
  for (const auto& points : report.pp) {
    ordered_json list = ordered_json::array();
    for (const PpPoint& pt : points)
      list.push_back(ordered_json::array({jnum(pt.u_model), jnum(pt.u_empirical)}));
    pp.push_back(std::move(list));
  }
  j["pp"] = std::move(pp);
  dump_json_file(j, in_dir("diagnostics.json"));

  auto write_matrix_csv = [&](const Matrix& m, const std::string& name) {
    std::ostringstream out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c > 0) out << ',';
        out << shortest(m(i, c));
      }
      out << "\n";
    }
    write_text_file(in_dir(name), out.str());
  };
  write_matrix_csv(report.correlation, "correlation.csv");
  write_matrix_csv(report.p_value, "p_values.csv");

  std::ostringstream isi;
  isi << "neuron,observed_mean,observed_mean_se,observed_variance,observed_variance_se,"
         "model_mean,model_mean_se,model_variance,model_variance_se\n";
  for (std::size_t i = 0; i < report.p; ++i) {
    const IsiMoments& o = report.observed[i];
    const IsiMoments& m = report.model[i];
    isi << i << ',' << shortest(o.mean) << ',' << shortest(o.se_mean) << ',' << shortest(o.variance)
        << ',' << shortest(o.se_variance) << ',' << shortest(m.mean) << ',' << shortest(m.se_mean)
        << ',' << shortest(m.variance) << ',' << shortest(m.se_variance) << "\n";
  }
  write_text_file(in_dir("isi_table.csv"), isi.str());

  for (std::size_t i = 0; i < report.pp.size(); ++i) {
    std::ostringstream out;
    out << "u_model,u_empirical\n";
    for (const PpPoint& pt : report.pp[i])
      out << shortest(pt.u_model) << ',' << shortest(pt.u_empirical) << "\n";
    write_text_file(in_dir(format("pp_neuron_", i, ".csv")), out.str());
  }
}

}  // namespace mspr
