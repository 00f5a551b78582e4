#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "hob/datagen.hpp"
#include "hob/numfmt.hpp"
#include "hob/report.hpp"
#include "hob/simulate.hpp"

namespace hob::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kDefaultChannels = "spa:0.34,fpa_u:0.33,fpa_nu:0.33";
constexpr const char* kDefaultMethods = "UE&UB,UE&NUB-Z,MCAE&NUB-Z";

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    std::string item(s.substr(0, comma));
    s.remove_prefix(comma == std::string_view::npos ? s.size() : comma + 1);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  for (const auto& label : split_list(list)) out.push_back(Method::parse(label));
  if (out.empty()) throw ConfigError("no methods given");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text(path, text);
}

// datagen -------------------------------------------------------------------

struct DatagenArgs {
  std::size_t n = 0;
  long dim = 20;
  std::uint64_t seed = 0;
  double noise_theta = 0.3;
  double noise_lambda = 0.3;
  std::string value_mode = "clamp";
  double value_scale = 1.0;
  std::string channels = kDefaultChannels;
  double organic_sigma = 0.0;
  std::string out;
};

int cmd_datagen(const DatagenArgs& a, std::ostream& out) {
  GeneratorConfig config;
  config.n_samples = a.n;
  config.feature_dim = a.dim;
  config.seed = a.seed;
  config.noise_theta = a.noise_theta;
  config.noise_lambda = a.noise_lambda;
  if (a.value_mode == "clamp")
    config.value_mode = ValueMode::Clamp;
  else if (a.value_mode == "abs")
    config.value_mode = ValueMode::Abs;
  else
    throw ConfigError("--value-mode must be clamp or abs");
  config.value_scale = a.value_scale;

  Dataset data = generate(config);
  if (a.organic_sigma > 0.0) data = organicize(data, {a.organic_sigma, a.seed});
  const auto channels = parse_channels(a.channels);
  tag_channels(data, channels);

  const fs::path path(a.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_dataset(path, data);

  GeneratorManifest manifest = make_manifest(config, data);
  auto j = ordered_json::parse(manifest_json(manifest));
  j["organic_sigma"] = a.organic_sigma;
  j["channels"] = format_channels(channels);
  j["dataset"] = path.filename().string();
  write_text(fs::path(a.out + ".manifest.json"), j.dump(2) + "\n");
  out << "datagen: " << data.size() << " rows, zero fraction " << format_double(manifest.zero_fraction) << " -> "
      << a.out << '\n';
  return kOk;
}

// fit -----------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string dist = "zie";
  int epochs = 500;
  double lr = 0.05;
  std::size_t batch = 0;
  double split = 0.8;
  std::uint64_t seed = 0;
  double eta = 1.0;
  std::string out_dir;
};

std::vector<DistKind> parse_kinds(std::string_view list) {
  if (list == "all") return {DistKind::Zie, DistKind::Exponential, DistKind::LogNormal, DistKind::Gamma};
  std::vector<DistKind> out;
  for (const auto& k : split_list(list)) out.push_back(parse_dist_kind(k));
  if (out.empty()) throw ConfigError("--dist is empty");
  return out;
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const Dataset data = load_dataset(a.data);
  if (!(a.split > 0.0 && a.split < 1.0)) throw ConfigError("--split must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(a.split * static_cast<double>(data.size()));
  if (n_train == 0 || n_train >= data.size()) throw ConfigError("--split leaves an empty train or eval set");
  const Dataset train = data.slice(0, n_train);
  const Dataset eval = data.slice(n_train, data.size());
  const Eigen::MatrixXd x_train = train.feature_matrix();
  const Eigen::MatrixXd x_eval = eval.feature_matrix();
  const auto w_train = train.winning_prices();
  const auto w_eval = eval.winning_prices();
  const auto grid = bce_bid_grid(w_eval);
  const std::vector<ChannelSpec> shaded = three_channels(0.0, 0.0, 1.0);

  const auto surplus_rate = [&](DistKind kind, Landscape landscape) {
    Replay replay(eval, shaded, {});
    replay.set_landscape(kind, std::move(landscape));
    return replay.run({Strategy::UeNub, kind}, {a.eta, a.eta}).total.surplus_rate;
  };

  ordered_json doc;
  doc["format"] = "hob-fit-metrics v1";
  doc["train_rows"] = train.size();
  doc["eval_rows"] = eval.size();
  doc["seed"] = a.seed;
  doc["epochs"] = a.epochs;
  doc["learning_rate"] = a.lr;
  doc["batch_size"] = a.batch;
  doc["eta"] = a.eta;
  doc["bid_grid_points"] = grid.size();
  ordered_json models = ordered_json::array();
  fs::create_directories(a.out_dir);

  for (DistKind kind : parse_kinds(a.dist)) {
    TrainConfig tc;
    tc.learning_rate = a.lr;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.seed = a.seed;
    const TrainResult res = train_param_model(kind, x_train, w_train, tc);
    std::ostringstream model_text;
    res.model.save(model_text);
    const fs::path model_path = fs::path(a.out_dir) / (std::string(to_string(kind)) + ".model");
    write_file_atomic(model_path, model_text.str());

    const auto preds = res.model.predict_rows(x_eval);
    const double bce = eval_bce(std::span<const WinModel>(preds), w_eval, grid);
    const double rate = surplus_rate(kind, preds);
    const double train_loss =
        res.epoch_loss.empty() ? res.model.loss(x_train, w_train, tc.zero_epsilon) : res.epoch_loss.back();
    ordered_json m;
    m["dist"] = std::string(to_string(kind));
    m["model_file"] = model_path.filename().string();
    m["bce"] = number_json(bce);
    m["surplus_rate"] = number_json(rate);
    m["train_loss"] = number_json(train_loss);
    m["eval_loss"] = number_json(res.model.loss(x_eval, w_eval, tc.zero_epsilon));
    models.push_back(std::move(m));
    out << "fit: " << to_string(kind) << " bce " << format_double(bce) << " surplus_rate " << format_double(rate)
        << '\n';
  }
  doc["models"] = std::move(models);
  if (eval.has_truth()) {
    const Landscape truth = truth_landscape(eval);
    doc["reference"] = {{"dist", "truth"},
                        {"bce", number_json(eval_bce(std::span<const WinModel>(truth), w_eval, grid))},
                        {"surplus_rate", number_json(surplus_rate(DistKind::Zie, truth))}};
  }
  write_text(fs::path(a.out_dir) / "fit_metrics.json", doc.dump(2) + "\n");
  return kOk;
}

// shared replay setup -------------------------------------------------------

struct ReplayArgs {
  std::string data;
  std::vector<std::string> models;
  bool truth = false;
  std::string channels = kDefaultChannels;
  std::string assignment = "partition";
  std::string outcomes = "realized";
  int n_iter = kOfflineIterations;
  double value_per_click = 1.0;
  unsigned threads = 0;
};

struct CampaignArgs {
  std::string objective = "max_return";
  double budget = 0.0;
  double target_roi = 0.0;
  double epsilon = 0.05;
  double target_cpc = 0.0;
  double tolerance = 1e-3;
  double eta_lo = 1e-3;
  double eta_hi = 1e3;
  bool no_mc = false;
};

void add_replay_options(CLI::App* cmd, ReplayArgs& r) {
  cmd->add_option("--data", r.data, "Impression log (.jsonl or .csv)")->required();
  cmd->add_option("--model", r.models, "Landscape model file; repeat for several families");
  cmd->add_flag("--truth-landscape", r.truth, "Shade against the generating ZIE parameters stored in the data");
  cmd->add_option("--channels", r.channels, "Channel shares, e.g. spa:0.34,fpa_u:0.33,fpa_nu:0.33")
      ->capture_default_str();
  cmd->add_option("--assignment", r.assignment, "partition | duplicate | tagged")->capture_default_str();
  cmd->add_option("--outcomes", r.outcomes, "realized | expected")->capture_default_str();
  cmd->add_option("--n-iter", r.n_iter, "Golden-section iterations per shaded bid")->capture_default_str();
  cmd->add_option("--value-per-click", r.value_per_click, "Currency per unit of value")->capture_default_str();
  cmd->add_option("--threads", r.threads, "Worker threads (0: HOB_THREADS or all cores)")->capture_default_str();
}

void add_campaign_options(CLI::App* cmd, CampaignArgs& c) {
  cmd->add_option("--objective", c.objective, "max_return | target_roas | target_cpc")->capture_default_str();
  cmd->add_option("--budget", c.budget, "Budget; the cost target for max_return")->required();
  cmd->add_option("--target-roi", c.target_roi, "ROI target for target_roas");
  cmd->add_option("--epsilon", c.epsilon, "ROI band half-width for target_roas")->capture_default_str();
  cmd->add_option("--target-cpc", c.target_cpc, "Cost per unit value for target_cpc");
  cmd->add_option("--tolerance", c.tolerance, "Relative bisection tolerance on cost or CPC")->capture_default_str();
  cmd->add_option("--eta-lo", c.eta_lo, "Lower end of the eta bracket")->capture_default_str();
  cmd->add_option("--eta-hi", c.eta_hi, "Upper end of the eta bracket")->capture_default_str();
  cmd->add_flag("--no-mc", c.no_mc, "Skip finite-difference marginal costs");
}

Campaign make_campaign(const CampaignArgs& c) {
  switch (parse_objective(c.objective)) {
    case Objective::MaxReturn: return Campaign::max_return(c.budget);
    case Objective::TargetRoas: return Campaign::roas(c.budget, c.target_roi, c.epsilon);
    case Objective::TargetCpc: return Campaign::cpc(c.budget, c.target_cpc);
  }
  throw ConfigError("unknown objective");
}

MatchOptions make_match(const CampaignArgs& c) {
  MatchOptions m;
  m.eta_lo = c.eta_lo;
  m.eta_hi = c.eta_hi;
  m.tolerance = c.tolerance;
  m.estimate_mc = !c.no_mc;
  return m;
}

ReplayOptions make_replay_options(const ReplayArgs& r) {
  ReplayOptions o;
  o.assignment = parse_assignment(r.assignment);
  o.outcomes = parse_outcome_mode(r.outcomes);
  o.n_iter = r.n_iter;
  o.value_per_click = r.value_per_click;
  o.threads = r.threads;
  return o;
}

std::vector<LinearParamModel> load_models(const ReplayArgs& r, Eigen::Index feature_dim) {
  std::vector<LinearParamModel> models;
  for (const auto& path : r.models) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model '" + path + "'");
    models.push_back(LinearParamModel::load(in));
    if (models.back().feature_dim() != feature_dim)
      throw ConfigError("model '" + path + "' expects " + std::to_string(models.back().feature_dim()) +
                        " features, dataset has " + std::to_string(feature_dim));
    if (r.truth && models.back().kind() == DistKind::Zie)
      throw ConfigError("--truth-landscape and a zie --model are mutually exclusive");
  }
  return models;
}

void install_landscapes(Replay& replay, const std::vector<LinearParamModel>& models, bool truth) {
  for (const auto& m : models) replay.set_landscape(m.kind(), predict_landscape(m, replay.data()));
  if (truth) replay.set_landscape(DistKind::Zie, truth_landscape(replay.data()));
}

ordered_json run_header(std::string_view command, const ReplayArgs& r, const Campaign& campaign,
                        std::size_t rows) {
  ordered_json doc;
  doc["format"] = kReportFormat;
  doc["command"] = std::string(command);
  doc["status"] = "ok";
  doc["dataset_rows"] = rows;
  doc["channels"] = format_channels(parse_channels(r.channels));
  doc["assignment"] = r.assignment;
  doc["outcomes"] = r.outcomes;
  doc["campaign"] = to_json(campaign);
  return doc;
}

void mark_infeasible(ordered_json& doc, const InfeasibleError& e) {
  doc["status"] = "infeasible";
  doc["error"] = e.what();
  doc["bracket_metrics"] = {number_json(e.lo_metric()), number_json(e.hi_metric())};
}

void print_summary(std::ostream& out, const ReplayReport& r, double delta) {
  out << std::left << std::setw(14) << r.method << " eta " << std::setw(12) << format_double(r.eta) << " value "
      << std::setw(12) << format_double(r.total.value) << " cost " << std::setw(12) << format_double(r.total.cost);
  if (!std::isnan(delta)) out << " delta " << format_double(delta) << '%';
  out << '\n';
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  ReplayArgs replay;
  CampaignArgs campaign;
  std::string method = "MCAE&NUB-Z";
  std::optional<double> eta;
  std::string out;
  std::string outcome_log;
  bool stream = false;
  int periods = 24;
  double kp = 0.4, ki = 0.1, kd = 0.05;
  double initial_eta = 1.0;
  std::string trace;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const Dataset data = load_dataset(a.replay.data);
  const auto models = load_models(a.replay, data.feature_dim);
  const Campaign campaign = make_campaign(a.campaign);
  ReplayOptions ro = make_replay_options(a.replay);
  if (a.stream) ro.n_iter = std::min(ro.n_iter, kOnlineIterations);
  Replay replay(data, parse_channels(a.replay.channels), ro);
  install_landscapes(replay, models, a.replay.truth);
  const Method method = Method::parse(a.method);

  ordered_json doc = run_header("simulate", a.replay, campaign, data.size());
  ReplayReport report;
  std::optional<StreamResult> stream;
  if (a.stream) {
    ControlConfig cc;
    cc.periods = a.periods;
    cc.kp = a.kp;
    cc.ki = a.ki;
    cc.kd = a.kd;
    cc.n_iter = ro.n_iter;
    stream = run_streaming(replay, method, campaign, cc, a.initial_eta);
    report = stream->report;
    doc["mode"] = "stream";
  } else if (a.eta) {
    const Alignment al = method.strategy == Strategy::McaeNub ? replay.align(*a.eta)
                                                               : Alignment{{*a.eta, *a.eta}, {}, 0};
    report = replay.run(method, al.etas);
    if (method.strategy == Strategy::McaeNub) report.fit = al.fit;
    if (!a.campaign.no_mc) {
      const OutcomeMode mode = data.has_truth() ? OutcomeMode::Expected : ro.outcomes;
      const auto mc = replay_mc(replay, method, *a.eta, 1e-3 * *a.eta, report.fit, mode);
      for (std::size_t c = 0; c < report.channels.size(); ++c) report.channels[c].mc = mc[c];
      report.total.mc = mc.back();
    }
    doc["mode"] = "fixed_eta";
  } else {
    try {
      report = run_matched(replay, method, campaign, make_match(a.campaign));
    } catch (const InfeasibleError& e) {
      mark_infeasible(doc, e);
      doc["reports"] = ordered_json::array();
      emit(a.out, doc.dump(2) + "\n", out);
      throw;
    }
    doc["mode"] = "matched";
  }
  doc["reports"] = ordered_json::array({to_json(report)});
  emit(a.out, doc.dump(2) + "\n", out);

  if (stream && !a.trace.empty()) {
    std::ostringstream csv;
    write_trace_csv(csv, stream->trace);
    write_text(a.trace, csv.str());
  }
  if (!a.outcome_log.empty()) {
    if (stream) throw ConfigError("--outcome-log is not available with --stream");
    std::vector<OutcomeRow> log;
    replay.run(method, {report.eta, report.eta3}, &log);
    std::ostringstream csv;
    write_outcome_csv(csv, log);
    write_text(a.outcome_log, csv.str());
  }
  return kOk;
}

// compare -------------------------------------------------------------------

struct CompareArgs {
  ReplayArgs replay;
  CampaignArgs campaign;
  std::string methods = kDefaultMethods;
  std::string out;
  std::string table;
};

std::string fmt_or_empty(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const Dataset data = load_dataset(a.replay.data);
  const auto models = load_models(a.replay, data.feature_dim);
  const Campaign campaign = make_campaign(a.campaign);
  Replay replay(data, parse_channels(a.replay.channels), make_replay_options(a.replay));
  install_landscapes(replay, models, a.replay.truth);

  std::vector<Method> methods = parse_methods(a.methods);
  const Method baseline{Strategy::UeUb, DistKind::Zie};
  if (std::none_of(methods.begin(), methods.end(), [](const Method& m) { return m.strategy == Strategy::UeUb; }))
    methods.insert(methods.begin(), baseline);

  ordered_json doc = run_header("compare", a.replay, campaign, data.size());
  std::vector<ReplayReport> reports;
  const MatchOptions match = make_match(a.campaign);
  for (const Method& m : methods) {
    try {
      reports.push_back(run_matched(replay, m, campaign, match));
    } catch (const InfeasibleError& e) {
      mark_infeasible(doc, e);
      doc["failed_method"] = m.label();
      doc["reports"] = report_document(reports)["reports"];
      emit(a.out, doc.dump(2) + "\n", out);
      throw;
    }
  }
  const auto base_it = std::find_if(reports.begin(), reports.end(),
                                    [](const ReplayReport& r) { return r.method == "UE&UB"; });
  doc["baseline"] = "UE&UB";
  doc["reports"] = report_document(reports)["reports"];
  ordered_json deltas = ordered_json::array();
  std::ostringstream csv;
  csv << "method,channel,eta,value,cost,mc,roi,surplus_rate,value_delta_pct\n";
  for (const auto& r : reports) {
    const double delta = value_delta_percent(r, *base_it);
    deltas.push_back({{"method", r.method}, {"value_delta_percent", number_json(delta)}});
    print_summary(out, r, delta);
    auto row = [&](const ChannelReport& c, bool total) {
      csv << r.method << ',' << c.channel << ',' << fmt_or_empty(c.eta) << ',' << fmt_or_empty(c.value) << ','
          << fmt_or_empty(c.cost) << ',' << fmt_or_empty(c.mc) << ',' << fmt_or_empty(c.roi) << ','
          << fmt_or_empty(c.surplus_rate) << ',' << (total ? fmt_or_empty(delta) : std::string()) << '\n';
    };
    for (const auto& c : r.channels) row(c, false);
    row(r.total, true);
  }
  doc["deltas"] = std::move(deltas);
  if (!a.out.empty()) emit(a.out, doc.dump(2) + "\n", out);
  if (!a.table.empty()) write_text(a.table, csv.str());
  return kOk;
}

// sweep ---------------------------------------------------------------------

struct SweepArgs {
  ReplayArgs replay;
  CampaignArgs campaign;
  std::string methods = kDefaultMethods;
  std::string experiment;
  std::string grid;
  std::string varied = "fpa_nu";
  std::uint64_t seed = 0;
  std::string out;
  std::string summary;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const Dataset data = load_dataset(a.replay.data);
  const auto models = load_models(a.replay, data.feature_dim);
  const SweepExperiment experiment = parse_sweep_experiment(a.experiment);
  std::vector<double> grid;
  for (const auto& s : split_list(a.grid)) grid.push_back(parse_double(s));
  if (grid.empty()) throw ConfigError("--grid is empty");

  SweepBase base;
  base.data = &data;
  base.channels = parse_channels(a.replay.channels);
  base.replay = make_replay_options(a.replay);
  base.campaign = make_campaign(a.campaign);
  base.methods = parse_methods(a.methods);
  for (const auto& m : models) base.models[m.kind()] = &m;
  base.use_truth_landscape = a.replay.truth;
  base.match = make_match(a.campaign);
  base.varied_channel = a.varied;
  base.seed = a.seed;
  const auto points = sweep(experiment, grid, base);

  // Trend statistic: MCA uplift over the unaligned shading method of the same
  // family, falling back to UE&UB.
  const auto index_of = [&](const std::string& label) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < base.methods.size(); ++k)
      if (base.methods[k].label() == label) return k;
    return std::nullopt;
  };
  std::optional<std::size_t> subject, reference;
  for (std::size_t k = 0; k < base.methods.size() && !subject; ++k)
    if (base.methods[k].strategy == Strategy::McaeNub) {
      subject = k;
      reference = index_of(Method{Strategy::UeNub, base.methods[k].dist}.label());
      if (!reference) reference = index_of("UE&UB");
    }

  std::ostringstream csv;
  csv << "experiment,x,method,channel,eta,eta3,value,cost,mc,roi,surplus_rate,value_delta_pct\n";
  ordered_json doc;
  doc["format"] = kReportFormat;
  doc["command"] = "sweep";
  doc["status"] = "ok";
  doc["experiment"] = std::string(to_string(experiment));
  doc["campaign"] = to_json(base.campaign);
  ordered_json jpoints = ordered_json::array();
  std::vector<double> xs, uplift;
  const auto ueub = index_of("UE&UB");
  for (const auto& p : points) {
    for (std::size_t k = 0; k < p.reports.size(); ++k) {
      const ReplayReport& r = p.reports[k];
      const double delta = ueub ? value_delta_percent(r, p.reports[*ueub]) : std::nan("");
      auto row = [&](const ChannelReport& c, bool total) {
        csv << to_string(experiment) << ',' << format_double(p.x) << ',' << r.method << ',' << c.channel << ','
            << fmt_or_empty(c.eta) << ',' << fmt_or_empty(r.eta3) << ',' << fmt_or_empty(c.value) << ','
            << fmt_or_empty(c.cost) << ',' << fmt_or_empty(c.mc) << ',' << fmt_or_empty(c.roi) << ','
            << fmt_or_empty(c.surplus_rate) << ',' << (total ? fmt_or_empty(delta) : std::string()) << '\n';
      };
      for (const auto& c : r.channels) row(c, false);
      row(r.total, true);
    }
    ordered_json jp;
    jp["x"] = p.x;
    jp["reports"] = report_document(p.reports)["reports"];
    jpoints.push_back(std::move(jp));
    if (subject && reference) {
      xs.push_back(p.x);
      uplift.push_back(value_delta_percent(p.reports[*subject], p.reports[*reference]));
    }
  }
  if (subject && reference) {
    const double rho = spearman(xs, uplift);
    doc["trend"] = {{"statistic", "spearman"},
                    {"subject", base.methods[*subject].label()},
                    {"reference", base.methods[*reference].label()},
                    {"uplift_percent", uplift},
                    {"rho", number_json(rho)}};
    out << "sweep: spearman(x, uplift of " << base.methods[*subject].label() << " over "
        << base.methods[*reference].label() << ") = " << format_double(rho) << '\n';
  }
  doc["points"] = std::move(jpoints);
  emit(a.out, csv.str(), out);
  if (!a.summary.empty()) write_text(a.summary, doc.dump(2) + "\n");
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-channel bidding replay: data generation, landscape fitting, constraint-matched replays"};
  app.name("hob");
  app.set_config("--config", "", "INI file; [datagen], [fit], ... sections set subcommand options");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "Print the effective configuration as INI and exit");
  app.require_subcommand(1);
  app.fallthrough();

  DatagenArgs dg;
  auto* datagen = app.add_subcommand("datagen", "Generate a synthetic impression log");
  datagen->add_option("--n", dg.n, "Number of impressions")->required()->check(CLI::PositiveNumber);
  datagen->add_option("--dim", dg.dim, "Feature dimension")->check(CLI::PositiveNumber)->capture_default_str();
  datagen->add_option("--seed", dg.seed, "Random seed")->required();
  datagen->add_option("--noise-theta", dg.noise_theta, "Noise scale on the raw zero-inflation logit")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  datagen->add_option("--noise-lambda", dg.noise_lambda, "Noise scale on the raw rate")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  datagen->add_option("--value-mode", dg.value_mode, "clamp | abs")->capture_default_str();
  datagen->add_option("--value-scale", dg.value_scale, "Multiplier on impression values")->capture_default_str();
  datagen->add_option("--channels", dg.channels, "Channel shares used to tag rows")->capture_default_str();
  datagen->add_option("--organic-sigma", dg.organic_sigma, "Relative organic price noise (0 disables)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  datagen->add_option("--out", dg.out, "Output file (.jsonl or .csv)")->required();

  FitArgs ft;
  auto* fit = app.add_subcommand("fit", "Train landscape models and report BCE / surplus rate");
  fit->add_option("--data", ft.data, "Impression log")->required();
  fit->add_option("--dist", ft.dist, "zie | exp | lognormal | gamma, comma list, or all")->capture_default_str();
  fit->add_option("--epochs", ft.epochs, "Training epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
  fit->add_option("--lr", ft.lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  fit->add_option("--batch", ft.batch, "Mini-batch size (0: full batch)")->capture_default_str();
  fit->add_option("--split", ft.split, "Train fraction; the tail is held out")->capture_default_str();
  fit->add_option("--seed", ft.seed, "Shuffle seed")->required();
  fit->add_option("--eta", ft.eta, "Multiplier for the held-out surplus rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--out-dir", ft.out_dir, "Directory for <dist>.model and fit_metrics.json")->required();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Replay one method");
  add_replay_options(simulate, sim.replay);
  add_campaign_options(simulate, sim.campaign);
  simulate->add_option("--method", sim.method, "UE&UB, UE&NUB-<Z|E|L|G>, MCAE&NUB-<...>")->capture_default_str();
  simulate->add_option("--eta", sim.eta, "Fixed eta instead of constraint matching")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Report JSON (default stdout)");
  simulate->add_option("--outcome-log", sim.outcome_log, "Per-impression outcome CSV");
  simulate->add_flag("--stream", sim.stream, "Streaming replay with PID control of eta");
  simulate->add_option("--periods", sim.periods, "Control periods")->capture_default_str();
  simulate->add_option("--kp", sim.kp, "Proportional gain")->capture_default_str();
  simulate->add_option("--ki", sim.ki, "Integral gain")->capture_default_str();
  simulate->add_option("--kd", sim.kd, "Derivative gain")->capture_default_str();
  simulate->add_option("--initial-eta", sim.initial_eta, "Starting eta for --stream")->capture_default_str();
  simulate->add_option("--trace", sim.trace, "Controller trace CSV for --stream");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Constraint-matched replays of several methods");
  add_replay_options(compare, cmp.replay);
  add_campaign_options(compare, cmp.campaign);
  compare->add_option("--methods", cmp.methods, "Comma list of methods")->capture_default_str();
  compare->add_option("--out", cmp.out, "Report JSON");
  compare->add_option("--table", cmp.table, "Per-channel CSV table with deltas against UE&UB");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Robustness sweep over budgets, channel shares or organic noise");
  add_replay_options(sweep_cmd, sw.replay);
  add_campaign_options(sweep_cmd, sw.campaign);
  sweep_cmd->add_option("--methods", sw.methods, "Comma list of methods")->capture_default_str();
  sweep_cmd->add_option("--experiment", sw.experiment, "budget_levels | channel_proportions | organic_share")
      ->required();
  sweep_cmd->add_option("--grid", sw.grid, "Comma list of grid values")->required();
  sweep_cmd->add_option("--varied-channel", sw.varied, "Channel varied by channel_proportions")
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sw.seed, "Seed for organic_share noise")->required();
  sweep_cmd->add_option("--out", sw.out, "Tidy CSV (default stdout)");
  sweep_cmd->add_option("--summary", sw.summary, "Summary JSON with reports and the trend statistic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (print_config) {
    // Unset options print as key="", which would read back as an empty value.
    for (const auto* sub : app.get_subcommands()) {
      out << '[' << sub->get_name() << "]\n";
      std::istringstream lines(sub->config_to_str(true, false));
      for (std::string line; std::getline(lines, line);)
        if (!line.ends_with("=\"\"")) out << line << '\n';
    }
    return kOk;
  }

  try {
    if (*datagen) return cmd_datagen(dg, out);
    if (*fit) return cmd_fit(ft, out);
    if (*simulate) return cmd_simulate(sim, out);
    if (*compare) return cmd_compare(cmp, out);
    if (*sweep_cmd) return cmd_sweep(sw, out);
  } catch (const InfeasibleError& e) {
    err << "hob: infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NumericError& e) {
    err << "hob: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const DegenerateError& e) {
    err << "hob: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const ConfigError& e) {
    err << "hob: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "hob: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "hob: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}

}  // namespace hob::cli
