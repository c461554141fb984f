#include "mhglm_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "mhglm/ebayes.hpp"
#include "mhglm/error.hpp"
#include "mhglm/sim.hpp"

namespace mhglm::cli {

namespace {

std::string num(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

/// Writes to the named file, or to `fallback` when path is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InvalidInput("cannot write '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

SingularOperator name_singular(const SingularOperator& e, const GroupedDataset& d) {
  const VectorXd& dir = e.direction();
  std::vector<std::string> parts;
  std::string hint;
  if (std::string(e.what()).rfind("Omega2", 0) == 0) {
    const SymBasis basis(d.q);
    if (dir.size() == basis.dim()) {
      const MatrixXd m = basis.smat(dir);
      for (Index j = 0; j < d.q; ++j)
        for (Index i = j; i < d.q; ++i)
          if (std::abs(m(i, j)) >= 0.1)
            parts.push_back(i == j ? "var(" + d.z_names[i] + ")" : "cov(" + d.z_names[i] + ", " + d.z_names[j] + ")");
    }
    hint = "hint: random-effect columns that are constant or collinear within every group cannot be told apart; "
           "drop or combine them";
  } else {
    if (dir.size() == d.p)
      for (Index k = 0; k < d.p; ++k)
        if (std::abs(dir(k)) >= 0.1) parts.push_back(d.x_names[k]);
    hint = "hint: fixed-effect columns that are constant, zero or collinear across groups are not identifiable; "
           "drop one of them or use --no-intercept";
  }
  std::string msg = e.what();
  if (!parts.empty()) msg += "\n  near-null direction involves: " + join(parts, ", ");
  msg += "\n  " + hint;
  return SingularOperator(msg, dir, e.inverse_condition());
}

std::vector<sim::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<sim::Method> out;
  for (const auto& n : names) out.push_back(sim::method_from_name(n));
  return out;
}

void write_study_table(std::ostream& os, const sim::StudyResult& r) {
  os << "method,N,ok,failed";
  for (const char* m : {"fixed_loss", "cov_loss", "raneff_loss", "pred_loss", "seconds"})
    os << ',' << m << "_mean," << m << "_se," << m << "_median," << m << "_count";
  os << '\n';
  for (const auto& row : r.rows) {
    os << sim::method_name(row.method) << ',' << row.N << ',' << row.ok << ',' << row.failed;
    for (const auto* m : {&row.fixed_loss, &row.cov_loss, &row.raneff_loss, &row.pred_loss, &row.seconds}) {
      if (m->count == 0) {
        os << ",,,,0";
      } else {
        os << ',' << num(m->mean, 10) << ',' << num(m->se, 10) << ',' << num(m->median, 10) << ',' << m->count;
      }
    }
    os << '\n';
  }
}

void write_records(std::ostream& os, const sim::StudyResult& r) {
  for (const auto& rec : r.records) {
    nlohmann::json j = {{"method", sim::method_name(rec.method)}, {"N", rec.N}, {"replicate", rec.replicate}};
    if (rec.loss) {
      j["fixed_loss"] = rec.loss->fixed_loss;
      j["cov_loss"] = rec.loss->cov_loss ? nlohmann::json(*rec.loss->cov_loss) : nlohmann::json(nullptr);
      j["raneff_loss"] = rec.loss->raneff_loss;
      j["pred_loss"] = rec.loss->pred_loss;
      j["seconds"] = rec.loss->seconds;
    } else {
      j["error"] = rec.error;
    }
    os << j.dump() << '\n';
  }
}

}  // namespace

MomentConfig moment_config(const std::string& weights, int refits, double rank_tol, unsigned threads, bool standardize) {
  MomentConfig c;
  if (weights == "unweighted")
    c.initial = Unweighted{};
  else if (weights == "weighted")
    c.initial = PrecisionWeighted{};
  else if (weights == "semiweighted")
    c.initial = SemiWeighted{};
  else
    throw InvalidInput("unknown weight scheme '" + weights + "'");
  if (refits < 0) throw InvalidInput("--refits must be non-negative");
  if (!(rank_tol > 0.0)) throw InvalidInput("--rank-tol must be positive");
  c.refits = refits;
  c.summary.rank_tol = rank_tol;
  c.threads = std::max(1u, threads);
  c.standardize = standardize;
  return c;
}

FitArtifact fit_table(const Table& table, const FitRequest& req) {
  if (req.roles.response.empty()) throw InvalidInput("--response-col is required");
  const Family family = Family::from_name(req.family);
  const TableDesign design = build_design(table, req.roles, true);
  const MomentConfig config = moment_config(req.weights, req.refits, req.rank_tol, req.threads, req.standardize);
  MomentFit fit;
  try {
    fit = fit_moment(design.data, family, config);
  } catch (const SingularOperator& e) {
    throw name_singular(e, design.data);
  }
  const PosteriorSet post = posteriors(fit, config.threads);
  return make_artifact(fit, post, req.roles, family.name(), req.weights, req.refits, req.rank_tol);
}

std::vector<PredictionRow> predict_table(const FitArtifact& model, const Table& table) {
  const Family family = Family::from_name(model.family);
  const TableDesign design = build_design(table, model.roles, false);
  std::vector<GroupPrediction> by_group;
  by_group.reserve(design.data.groups.size());
  for (const auto& g : design.data.groups)
    by_group.push_back(predict_group(model.posteriors, g.id, g.X, g.Z, model.beta, family));
  std::vector<PredictionRow> out(table.rows.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    const std::size_t g = design.row_group[r];
    out[r] = {design.data.groups[g].id, by_group[g].mu(design.row_index[r]), by_group[g].unseen};
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Moment-based fitting of hierarchical generalized linear models"};
  app.name("mhglm");
  app.require_subcommand(1);

  FitRequest fit_req;
  std::string input, out_path, posteriors_out, model_path, delimiter = ",";
  bool no_intercept = false, no_standardize = false;

  auto add_roles = [&](CLI::App* sub, bool with_response) {
    sub->add_option("--input", input, "Delimited input file with a header row")->required();
    sub->add_option("--delimiter", delimiter, "Field delimiter (single character)")->capture_default_str();
    if (with_response) {
      sub->add_option("--group-col", fit_req.roles.group, "Group key column")->required();
      sub->add_option("--response-col", fit_req.roles.response, "Response column")->required();
      sub->add_option("--fixed-cols", fit_req.roles.fixed, "Fixed-effect columns (comma separated)")->delimiter(',');
      sub->add_option("--random-cols", fit_req.roles.random, "Random-effect columns (comma separated)")->delimiter(',');
      sub->add_flag("--no-intercept", no_intercept, "Do not add an intercept to X and Z");
    }
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit a model and write a JSON fit artifact");
  add_roles(fit, true);
  fit->add_option("--family", fit_req.family, "gaussian or logit")
      ->check(CLI::IsMember({"gaussian", "logit"}))
      ->capture_default_str();
  fit->add_option("--weights", fit_req.weights, "Initial weight scheme")
      ->check(CLI::IsMember({"unweighted", "weighted", "semiweighted"}))
      ->capture_default_str();
  fit->add_option("--refits", fit_req.refits, "Semi-weighted refits after the first pass")->capture_default_str();
  fit->add_option("--rank-tol", fit_req.rank_tol, "Relative singular-value cutoff for group designs");
  fit->add_option("--threads", fit_req.threads, "Worker threads")->capture_default_str();
  fit->add_flag("--no-standardize", no_standardize, "Skip predictor standardization");
  fit->add_option("--out", out_path, "Fit artifact path (default stdout)");
  fit->add_option("--posteriors-out", posteriors_out, "Per-group posterior means (CSV)");

  CLI::App* predict = app.add_subcommand("predict", "Predict means for the rows of a file");
  add_roles(predict, false);
  predict->add_option("--model", model_path, "Fit artifact written by 'fit'")->required();
  predict->add_option("--out", out_path, "Predictions CSV (default stdout)");

  sim::StudyConfig study;
  std::string sim_family = "logit", sim_weights = "semiweighted", records_out;
  std::vector<std::string> methods{"mhglm", "global", "local"};
  std::vector<Index> n_grid{2000, 20000};
  int sim_refits = 1;
  study.M = 200;
  study.replicates = 5;
  CLI::App* simulate = app.add_subcommand("simulate", "Run a replicate simulation study");
  simulate->add_option("--family", sim_family, "gaussian or logit")
      ->check(CLI::IsMember({"gaussian", "logit"}))
      ->capture_default_str();
  simulate->add_option("--groups", study.M, "Number of groups M")->capture_default_str();
  simulate->add_option("--n-grid", n_grid, "Total sample sizes N (comma separated)")->delimiter(',');
  simulate->add_option("--p", study.p, "Fixed-effect dimension")->capture_default_str();
  simulate->add_option("--q", study.q, "Random-effect dimension")->capture_default_str();
  simulate->add_option("--replicates", study.replicates, "Replicates per N")->capture_default_str();
  simulate->add_option("--methods", methods, "Subset of mhglm,global,local")->delimiter(',');
  simulate->add_option("--weights", sim_weights, "Initial weight scheme")
      ->check(CLI::IsMember({"unweighted", "weighted", "semiweighted"}))
      ->capture_default_str();
  simulate->add_option("--refits", sim_refits, "Semi-weighted refits")->capture_default_str();
  simulate->add_option("--seed", study.seed, "Master seed")->capture_default_str();
  simulate->add_option("--threads", study.threads, "Worker threads")->capture_default_str();
  simulate->add_option("--out", out_path, "Summary table CSV (default stdout)");
  simulate->add_option("--records-out", records_out, "Per-replicate records (JSON lines)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (delimiter.size() != 1) throw InvalidInput("--delimiter must be a single character");
    const char delim = delimiter[0];
    if (fit->parsed()) {
      fit_req.roles.intercept = !no_intercept;
      fit_req.standardize = !no_standardize;
      const FitArtifact a = fit_table(read_table_file(input, delim), fit_req);
      {
        Sink sink(out_path, out);
        *sink << to_json(a).dump(2) << '\n';
      }
      if (!posteriors_out.empty()) {
        Sink sink(posteriors_out, out);
        *sink << "group";
        for (const auto& n : a.roles.random_names()) *sink << ",u_" << csv_field(n);
        *sink << '\n';
        for (const auto& p : a.posteriors.groups) {
          *sink << csv_field(p.group_id);
          for (Index k = 0; k < p.mean.size(); ++k) *sink << ',' << num(p.mean(k));
          *sink << '\n';
        }
      }
      for (const auto& s : a.skipped) err << "warning: group '" << s.group_id << "' skipped: " << s.reason << '\n';
    } else if (predict->parsed()) {
      const FitArtifact model = read_artifact(model_path);
      const Table table = read_table_file(input, delim);
      const auto rows = predict_table(model, table);
      Sink sink(out_path, out);
      *sink << "line," << csv_field(model.roles.group) << ",mu,unseen\n";
      std::size_t unseen = 0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        *sink << table.line[r] << ',' << csv_field(rows[r].group) << ',' << num(rows[r].mu) << ','
              << (rows[r].unseen ? 1 : 0) << '\n';
        unseen += rows[r].unseen ? 1 : 0;
      }
      if (unseen) err << "note: " << unseen << " row(s) belong to groups not in the model; population predictions used\n";
    } else if (simulate->parsed()) {
      study.family = Family::from_name(sim_family);
      study.methods = parse_methods(methods);
      study.N_grid = n_grid;
      study.moment = moment_config(sim_weights, sim_refits, kMachineEps, 1, true);
      const sim::StudyResult result = sim::run_study(study);
      {
        Sink sink(out_path, out);
        write_study_table(*sink, result);
      }
      if (!records_out.empty()) {
        Sink sink(records_out, out);
        write_records(*sink, result);
      }
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace mhglm::cli
