#pragma once

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "constants.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "graph_fit.hpp"
#include "inference.hpp"
#include "scatter.hpp"
#include "search.hpp"

namespace robggm {

enum class Subcommand { fit, test, search, partials, constants, dot };
enum class OutputFormat { json, text };

struct RunConfig {
  Subcommand subcommand = Subcommand::test;
  std::string data_path;
  std::string amat_path;
  double df = 3.0;
  double df_data = kInfiniteDf;
  std::optional<double> sigma1;
  bool plug_in_flag = false;
  bool direct_flag = false;
  double tol = 1e-8;
  int max_iter = 500;
  double alpha = 0.05;
  std::optional<double> tau;
  OutputFormat output = OutputFormat::json;
  std::optional<long> seed;
  int p = 0;  // dimension for `constants` when no data file is given
};

// Thrown by parse_args when the user asked for help; carries the text.
struct HelpRequested {
  std::string text;
};

inline RunConfig parse_args(std::vector<std::string> args) {
  CLI::App app{
      "Robust Gaussian graphical models: t-type scatter estimation, "
      "graph-constrained covariance fitting and deviance tests"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string output_str = "json";
  double sigma1_val = 0.0;
  double tau_val = 0.0;
  long seed_val = 0;
  std::vector<CLI::Option*> seed_opts;

  auto add_common = [&](CLI::App* sub, bool with_data, bool with_amat,
                        bool with_mode) {
    if (with_data)
      sub->add_option("data", cfg.data_path,
                      "CSV file with a header row of variable names; "
                      "resolved against ROBGGM_DATA_DIR if not found as given");
    if (with_amat)
      sub->add_option("--amat", cfg.amat_path,
                      "adjacency matrix CSV (0/1 entries, labels matching the "
                      "data header); default is the saturated graph");
    sub->add_option("--df", cfg.df,
                    "degrees of freedom of the estimator; 'inf' gives the "
                    "sample covariance (scatter normalized with 1/n)");
    sub->add_option("--tol", cfg.tol, "convergence tolerance of the "
                    "reweighting iteration");
    sub->add_option("--max-iter", cfg.max_iter,
                    "iteration cap of the reweighting loop");
    if (with_mode) {
      sub->add_flag("--plug-in", cfg.plug_in_flag,
                    "constrain the scatter after unconstrained estimation "
                    "(default)");
      sub->add_flag("--direct", cfg.direct_flag,
                    "enforce the graph constraints inside the reweighting "
                    "iteration");
    }
    sub->add_option("--output", output_str, "output format")
        ->check(CLI::IsMember({"json", "text"}));
    seed_opts.push_back(
        sub->add_option("--seed", seed_val,
                        "reserved for reproducibility; accepted but "
                        "currently unused"));
  };

  auto* fit = app.add_subcommand("fit", "fit a graph-constrained scatter");
  add_common(fit, true, true, true);

  auto* test = app.add_subcommand(
      "test", "deviance goodness-of-fit test of a graph");
  add_common(test, true, true, true);
  test->add_option("--df-data", cfg.df_data,
                   "df of the elliptical t data law used when computing the "
                   "default sigma1; 'inf' (default) means Gaussian data");
  auto* test_sig = test->add_option(
      "--sigma1", sigma1_val, "override the deviance scaling constant");

  auto* search = app.add_subcommand(
      "search", "backward stepwise edge pruning guarded by the deviance test");
  add_common(search, true, false, true);
  search->add_option("--df-data", cfg.df_data,
                     "df of the elliptical t data law used when computing the "
                     "default sigma1");
  auto* search_sig = search->add_option(
      "--sigma1", sigma1_val, "override the deviance scaling constant");
  search->add_option("--alpha", cfg.alpha, "test level guarding each removal");
  auto* search_tau = search->add_option(
      "--tau", tau_val,
      "start from the graph of partial correlations exceeding tau in "
      "absolute value instead of the saturated graph");

  auto* partials = app.add_subcommand(
      "partials", "correlation and partial correlation matrices of the "
                  "unconstrained fit");
  add_common(partials, true, false, false);

  auto* constants = app.add_subcommand(
      "constants", "asymptotic calibration constants of the estimator");
  constants->add_option("data", cfg.data_path,
                        "optional data CSV, only used for its dimension");
  constants->add_option("--p", cfg.p, "dimension, alternative to a data file");
  constants->add_option("--df", cfg.df,
                        "estimator df; 0 selects the distribution-free "
                        "shape-only estimator, 'inf' the sample covariance");
  constants->add_option("--df-data", cfg.df_data,
                        "df of the elliptical t data law; 'inf' (default) "
                        "means Gaussian data");
  constants->add_option("--output", output_str, "output format")
      ->check(CLI::IsMember({"json", "text"}));

  auto* dot = app.add_subcommand(
      "dot", "Graphviz rendering of a graph with fitted partial correlations");
  add_common(dot, true, true, true);

  std::reverse(args.begin(), args.end());  // CLI11 consumes args backwards
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (fit->parsed()) cfg.subcommand = Subcommand::fit;
  if (test->parsed()) cfg.subcommand = Subcommand::test;
  if (search->parsed()) cfg.subcommand = Subcommand::search;
  if (partials->parsed()) cfg.subcommand = Subcommand::partials;
  if (constants->parsed()) cfg.subcommand = Subcommand::constants;
  if (dot->parsed()) cfg.subcommand = Subcommand::dot;

  if (test_sig->count() || search_sig->count()) cfg.sigma1 = sigma1_val;
  if (search_tau->count()) cfg.tau = tau_val;
  for (const auto* o : seed_opts)
    if (o->count()) cfg.seed = seed_val;
  cfg.output = output_str == "text" ? OutputFormat::text : OutputFormat::json;

  if (cfg.subcommand != Subcommand::constants && cfg.data_path.empty())
    throw UsageError("a data CSV file is required");
  if (cfg.subcommand == Subcommand::constants && cfg.data_path.empty() &&
      cfg.p < 2)
    throw UsageError("constants needs either a data file or --p");
  return cfg;
}

namespace detail {

inline nlohmann::json json_df(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

inline nlohmann::json json_vector(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline nlohmann::json json_matrix(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json json_edges(const Graph& g) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto [i, j] : g.edges()) arr.push_back(nlohmann::json::array({i, j}));
  return arr;
}

inline nlohmann::json json_graph(const Graph& g) {
  return nlohmann::json{{"labels", g.labels()},
                        {"edges", json_edges(g)},
                        {"missing_edges", g.missing_edge_count()}};
}

// Fixed-point table with row/column labels, for text output of
// correlation-like matrices.
inline void print_table(std::ostream& out, const Matrix& m,
                        const std::vector<std::string>& labels, int decimals) {
  size_t w = 6;
  for (const auto& l : labels) w = std::max(w, l.size() + 1);
  w = std::max<size_t>(w, static_cast<size_t>(decimals) + 4);
  auto pad = [&](const std::string& s) {
    out << std::string(w > s.size() ? w - s.size() : 1, ' ') << s;
  };
  pad("");
  for (const auto& l : labels) pad(l);
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    pad(labels[i]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.*f", decimals, m(i, j));
      pad(buf);
    }
    out << "\n";
  }
}

inline std::string format_double(double v, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace detail

inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
  using nlohmann::json;

  FitMode mode = FitMode::plug_in;
  if (cfg.direct_flag && cfg.plug_in_flag) {
    diag << "warning: both --plug-in and --direct given; using the plug-in "
            "mode\n";
  } else if (cfg.direct_flag) {
    mode = FitMode::direct;
  }

  TestOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  opts.outer_tol = cfg.tol;

  const bool text = cfg.output == OutputFormat::text;

  if (cfg.subcommand == Subcommand::constants) {
    int p = cfg.p;
    if (p < 2) {
      DataMatrix data = ingest_csv(resolve_data_path(cfg.data_path));
      p = static_cast<int>(data.p());
    }
    const ConstantsQuery q{p, cfg.df, cfg.df_data};
    json j{{"p", p},
           {"df_est", detail::json_df(cfg.df)},
           {"df_data", detail::json_df(cfg.df_data)}};
    if (cfg.df == 0.0) {
      j["sigma1"] = find_sigma1(q);
      j["eta"] = nullptr;
      j["sigma2"] = nullptr;
    } else {
      const AsymptoticConstants c = asymptotic_constants(q);
      j["eta"] = c.eta;
      j["sigma1"] = c.sigma1;
      j["sigma2"] = c.sigma2;
      j["gamma1"] = c.gamma1;
      j["gamma2"] = c.gamma2;
    }
    if (text) {
      out << "p = " << p << "\n";
      for (const char* key : {"eta", "sigma1", "sigma2"})
        if (j.contains(key) && !j[key].is_null())
          out << key << " = "
              << detail::format_double(j[key].get<double>(), "%.12g") << "\n";
    } else {
      out << j.dump(2) << "\n";
    }
    return 0;
  }

  DataMatrix data = ingest_csv(resolve_data_path(cfg.data_path));
  const int p = static_cast<int>(data.p());
  Graph g = cfg.amat_path.empty()
                ? Graph::full(p, data.column_names())
                : ingest_adjacency(resolve_data_path(cfg.amat_path),
                                   data.column_names());

  switch (cfg.subcommand) {
    case Subcommand::fit: {
      ConstrainedFit cf =
          mode == FitMode::direct
              ? direct_fit(data, g, cfg.df, opts.graph_tol, opts.outer_tol,
                           opts.max_outer)
              : plug_in_fit(data, g, cfg.df, cfg.tol, cfg.max_iter);
      json j{{"mode", fit_mode_name(cf.mode)},
             {"df_est", detail::json_df(cfg.df)},
             {"n", static_cast<long>(data.n())},
             {"converged", cf.converged},
             {"iterations",
              {{"reweighting", cf.outer_iterations},
               {"graph_sweeps", cf.inner_iterations}}},
             {"labels", data.column_names()},
             {"location", detail::json_vector(cf.location)},
             {"scatter", detail::json_matrix(cf.scatter.mat())},
             {"graph", detail::json_graph(g)}};
      if (text) {
        out << "mode = " << fit_mode_name(cf.mode) << "\n"
            << "converged = " << (cf.converged ? "yes" : "no") << "\n"
            << "location =";
        for (Eigen::Index i = 0; i < cf.location.size(); ++i)
          out << " " << detail::format_double(cf.location(i));
        out << "\nscatter:\n";
        detail::print_table(out, cf.scatter.mat(), data.column_names(), 4);
      } else {
        out << j.dump(2) << "\n";
      }
      return 0;
    }

    case Subcommand::test: {
      std::optional<double> sig = cfg.sigma1;
      if (!sig) sig = find_sigma1(p, cfg.df, cfg.df_data);
      TestResult tr = deviance_test(data, g, cfg.df, mode, sig, opts);
      json j{{"deviance", tr.deviance},
             {"df", tr.df_chisq},
             {"sigma1", tr.sigma1},
             {"p_value", tr.p_value},
             {"mode", fit_mode_name(tr.mode)},
             {"df_est", detail::json_df(tr.df_est)},
             {"n", static_cast<long>(data.n())},
             {"converged", tr.converged},
             {"labels", data.column_names()},
             {"location", detail::json_vector(tr.location)},
             {"scatter", detail::json_matrix(tr.unconstrained_scatter.mat())},
             {"constrained_scatter",
              detail::json_matrix(tr.constrained_scatter.mat())},
             {"partials_fitted",
              detail::json_matrix(
                  partial_correlations(tr.constrained_scatter).mat())},
             {"graph", detail::json_graph(g)}};
      if (text) {
        out << "deviance = " << detail::format_double(tr.deviance) << "\n"
            << "df = " << tr.df_chisq << "\n"
            << "sigma1 = " << detail::format_double(tr.sigma1) << "\n"
            << "p-value = " << detail::format_double(tr.p_value) << "\n"
            << "mode = " << fit_mode_name(tr.mode) << "\n"
            << "converged = " << (tr.converged ? "yes" : "no") << "\n";
      } else {
        out << j.dump(2) << "\n";
      }
      return 0;
    }

    case Subcommand::search: {
      std::optional<double> sig = cfg.sigma1;
      if (!sig) sig = find_sigma1(p, cfg.df, cfg.df_data);
      SearchStart start = cfg.tau ? SearchStart::threshold(*cfg.tau)
                                  : SearchStart::full();
      SearchTrace tr =
          backward_search(data, cfg.df, cfg.alpha, mode, start, sig, opts);
      json steps = json::array();
      for (const auto& s : tr.steps) {
        json step{{"edge_count", static_cast<int>(s.graph.edges().size())},
                  {"missing_edges", s.graph.missing_edge_count()},
                  {"deviance", s.deviance},
                  {"p_value", s.p_value}};
        step["removed_edge"] =
            s.removed_edge ? json::array({s.removed_edge->first,
                                          s.removed_edge->second})
                           : json();
        steps.push_back(step);
      }
      json j{{"alpha", cfg.alpha},
             {"df_est", detail::json_df(cfg.df)},
             {"sigma1", *sig},
             {"mode", fit_mode_name(mode)},
             {"note",
              "explorative stepwise search; the repeated tests are not "
              "adjusted for multiplicity"},
             {"steps", steps},
             {"final_graph", detail::json_graph(tr.final_graph)},
             {"accepted", tr.accepted}};
      if (text) {
        out << "steps = " << tr.steps.size() << "\n"
            << "accepted = " << (tr.accepted ? "yes" : "no") << "\n"
            << "final edges:";
        for (auto [a, b] : tr.final_graph.edges())
          out << " " << tr.final_graph.labels()[a] << "-"
              << tr.final_graph.labels()[b];
        out << "\n";
      } else {
        out << j.dump(2) << "\n";
      }
      return 0;
    }

    case Subcommand::partials: {
      ScatterFit sf = fit_t_m_estimator(data, cfg.df, cfg.tol, cfg.max_iter);
      const SymMatrix corr = to_correlation(sf.scatter);
      const SymMatrix pmat = partial_correlations(sf.scatter);
      json j{{"df_est", detail::json_df(cfg.df)},
             {"n", static_cast<long>(data.n())},
             {"converged", sf.converged},
             {"labels", data.column_names()},
             {"correlation", detail::json_matrix(corr.mat())},
             {"partial_correlation", detail::json_matrix(pmat.mat())}};
      if (text) {
        out << "correlation:\n";
        detail::print_table(out, corr.mat(), data.column_names(), 2);
        out << "partial correlation:\n";
        detail::print_table(out, pmat.mat(), data.column_names(), 2);
      } else {
        out << j.dump(2) << "\n";
      }
      return 0;
    }

    case Subcommand::dot: {
      ConstrainedFit cf =
          mode == FitMode::direct
              ? direct_fit(data, g, cfg.df, opts.graph_tol, opts.outer_tol,
                           opts.max_outer)
              : plug_in_fit(data, g, cfg.df, cfg.tol, cfg.max_iter);
      const SymMatrix pmat = partial_correlations(cf.scatter);
      out << to_dot(g, &pmat);
      return 0;
    }

    default:
      throw UsageError("unknown subcommand");
  }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out,
                   std::ostream& diag) {
  auto emit_error = [&diag](const std::string& type, const std::string& msg) {
    nlohmann::json j{{"error", {{"type", type}, {"message", msg}}}};
    diag << j.dump() << "\n";
  };
  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    RunConfig cfg = parse_args(std::move(args));
    return run(cfg, out, diag);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const Error& e) {
    emit_error(e.type(), e.what());
    return e.kind() == ErrorKind::user ? 1 : 2;
  } catch (const std::exception& e) {
    emit_error("internal_error", e.what());
    return 2;
  }
}

}  // namespace robggm
