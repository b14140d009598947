// scanpath: command-line entry point for the reading-behavior pipeline.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "scanpath/classify_baseline.hpp"
#include "scanpath/eval.hpp"
#include "scanpath/metrics.hpp"
#include "scanpath/pipeline.hpp"
#include "scanpath/render.hpp"
#include "scanpath/service.hpp"
#include "scanpath/store.hpp"
#include "scanpath/synth.hpp"
#include "scanpath/windows.hpp"

namespace fs = std::filesystem;
using namespace scanpath;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitAssert = 3;

struct Globals {
  std::uint64_t seed = 7;
  int threads = 0;
  bool json = false;
};

// A SESSION argument is a session directory; its parent acts as the store root.
struct SessionRef {
  fs::path root;
  std::string id;
};

SessionRef session_ref(const std::string& arg) {
  fs::path p = fs::weakly_canonical(fs::path(arg));
  if (!fs::exists(p / "session.json")) fail(ErrorCode::NotFound, "not a session directory: " + arg);
  return {p.parent_path(), p.filename().string()};
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

std::vector<BehaviorLabel> trained_labels_of(std::span<const int> idx) {
  std::vector<BehaviorLabel> out;
  for (int i : idx) out.push_back(kTrainedBehaviors[static_cast<std::size_t>(i)]);
  return out;
}

// LABEL[@CONDITION]
std::pair<BehaviorLabel, Condition> parse_group(const std::string& s) {
  const auto at = s.find('@');
  if (at == std::string::npos) return {parse_behavior(s), Condition::InTheWild};
  return {parse_behavior(s.substr(0, at)), parse_condition(s.substr(at + 1))};
}

std::vector<double> column_values(std::span<const SegmentPoint> pts, BehaviorLabel l, Condition c,
                                  const std::string& metric) {
  std::vector<double> v;
  for (const auto& p : pts) {
    if (p.label != l || p.condition != c) continue;
    if (metric == "wpm") {
      v.push_back(p.wpm);
    } else if (metric == "inv_disp") {
      v.push_back(p.inverse_dispersion);
    } else {
      if (p.directional_saccades < 1) continue;
      v.push_back(p.fbsr);
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reading-behavior recognition from gaze scanpaths"};
  app.name("scanpath");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all logical cores)")->capture_default_str();
  app.add_flag("--json", g.json, "Print errors as JSON on stderr");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Store a recorded session and detect its fixations");
  std::string in_gaze, in_viewport, in_layout, in_out, in_id, in_participant, in_condition = "in-the-wild";
  ingest->add_option("--gaze", in_gaze, "Gaze log (CSV or JSON lines)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--viewport", in_viewport, "Viewport log (JSON lines)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--layout", in_layout, "Document layout (JSON)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", in_out, "Data directory")->required();
  ingest->add_option("--session-id", in_id, "Session id (default: generated)");
  ingest->add_option("--participant", in_participant, "Participant id");
  ingest->add_option("--condition", in_condition, "instructed or in-the-wild")->capture_default_str();

  // fixations
  auto* fixations = app.add_subcommand("fixations", "Detect fixations and saccades for a session");
  std::string fx_session, fx_out;
  FilterConfig fx_cfg;
  fixations->add_option("session", fx_session, "Session directory")->required();
  fixations->add_option("--dispersion", fx_cfg.dispersion_threshold, "Dispersion threshold, page widths")
      ->capture_default_str();
  fixations->add_option("--min-dur", fx_cfg.min_duration_ms, "Minimum fixation duration, ms")->capture_default_str();
  fixations->add_option("--max-gap", fx_cfg.max_gap_ms, "Largest sample gap inside a fixation, ms")
      ->capture_default_str();
  fixations->add_option("--out", fx_out, "Output directory (default: the session directory)");

  // features
  auto* features = app.add_subcommand("features", "Sliding-window feature table for a session");
  std::string ft_session, ft_out;
  double ft_window = 15.0, ft_stride = 1.0;
  features->add_option("session", ft_session, "Session directory")->required();
  features->add_option("--window", ft_window, "Window length, s")->capture_default_str();
  features->add_option("--stride", ft_stride, "Window stride, s")->capture_default_str();
  features->add_option("--out", ft_out, "Output CSV (default: stdout)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
  int sy_participants = 27;
  std::string sy_out;
  bool sy_instructed = false;
  synth->add_option("--participants", sy_participants, "Number of participants")->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth->add_option("--out", sy_out, "Output directory")->required();
  synth->add_flag("--instructed", sy_instructed, "Add one instructed-reading session per participant");

  // train
  auto* train = app.add_subcommand("train", "Train a classifier on a corpus");
  std::string tr_model, tr_corpus, tr_out, tr_history;
  double tr_window = 15.0;
  int tr_epochs = 50, tr_per_class = 250;
  train->add_option("--model", tr_model, "Model kind")->required()
      ->check(CLI::IsMember({"rules", "softmax", "cnn1d", "cnn2d"}));
  train->add_option("--corpus", tr_corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", tr_out, "Model file")->required();
  train->add_option("--window", tr_window, "Time-window length for softmax, s")->capture_default_str();
  train->add_option("--epochs", tr_epochs, "Maximum CNN epochs")->capture_default_str();
  train->add_option("--per-class", tr_per_class, "CNN windows per class per epoch (0 = all)")->capture_default_str();
  train->add_option("--history", tr_history, "CNN training history CSV");

  // eval
  auto* eval = app.add_subcommand("eval", "Leave-one-participant-out model comparison");
  std::string ev_corpus, ev_json, ev_models = "random,majority,softmax,cnn1d,cnn2d";
  bool ev_assert = false;
  double ev_window = 15.0;
  eval->add_option("--corpus", ev_corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--models", ev_models, "Comma-separated models")->capture_default_str();
  eval->add_option("--window", ev_window, "Time-window length for feature models, s")->capture_default_str();
  eval->add_option("--report", ev_json, "Write the full report as JSON");
  eval->add_flag("--assert", ev_assert, "Exit 3 unless cnn2d > softmax >= majority");

  // stats
  auto* stats = app.add_subcommand("stats", "Per-behavior significance tests");
  std::string st_corpus, st_test, st_by, st_metric, st_out;
  stats->add_option("--corpus", st_corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  stats->add_option("--test", st_test, "Test")->required()->check(CLI::IsMember({"mwu", "ttest", "hotelling"}));
  stats->add_option("--by", st_by,
                    "Comma-separated A:B pairs, each side LABEL[@CONDITION] (hotelling default: all pairs)");
  stats->add_option("--metric", st_metric, "wpm, inv_disp or fbsr (mwu default wpm, ttest default fbsr)")
      ->check(CLI::IsMember({"wpm", "inv_disp", "fbsr"}));
  stats->add_option("--out", st_out, "Report file (default: stdout)");

  // irr
  auto* irr = app.add_subcommand("irr", "Inter-rater agreement for a session");
  std::string irr_session;
  irr->add_option("session", irr_session, "Session directory")->required();

  // export
  auto* exp = app.add_subcommand("export", "Annotation table for a session");
  std::string ex_session, ex_out;
  exp->add_option("session", ex_session, "Session directory")->required();
  exp->add_option("--out", ex_out, "Output file (default: stdout)");

  // render
  auto* render = app.add_subcommand("render", "Scanplot PNG of a session time range");
  std::string rd_session, rd_out, rd_raw;
  double rd_from = 0.0, rd_to = 1e300;
  RenderConfig rd_cfg;
  bool rd_boxes = false;
  render->add_option("session", rd_session, "Session directory")->required();
  render->add_option("--from", rd_from, "Start, ms");
  render->add_option("--to", rd_to, "End, ms");
  render->add_option("--out", rd_out, "PNG file")->required();
  render->add_option("--raw", rd_raw, "Also write the float sidecar");
  render->add_option("--width", rd_cfg.width_px, "Image width, px")->capture_default_str();
  render->add_option("--height", rd_cfg.height_px, "Image height, px")->capture_default_str();
  render->add_flag("--word-boxes", rd_boxes, "Draw word boxes behind the scanpath");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP API over a data directory");
  int sv_port = 8080;
  std::string sv_data, sv_host = "127.0.0.1";
  serve->add_option("--port", sv_port, "Port")->capture_default_str();
  serve->add_option("--host", sv_host, "Bind address")->capture_default_str();
  serve->add_option("--data", sv_data, "Data directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*ingest) {
      SessionBundle b;
      b.session_id = in_id;
      b.participant_id = in_participant;
      b.condition = parse_condition(in_condition);
      b.samples = parse_gaze_log(read_text_file(in_gaze), in_id);
      b.rect_events = parse_viewport_log(read_text_file(in_viewport));
      b.layout = parse_layout(read_text_file(in_layout));
      SessionStore store(in_out);
      std::cout << json(store.create(std::move(b))).dump(2) << "\n";
    } else if (*fixations) {
      fx_cfg.validate();
      const auto ref = session_ref(fx_session);
      const auto ev = extract_events(read_session_dir(ref.root / ref.id), fx_cfg);
      const fs::path out = fx_out.empty() ? ref.root / ref.id : fs::path(fx_out);
      fs::create_directories(out);
      write_file_atomic(out / "fixations.jsonl", format_fixations_jsonl(ev.fixations));
      write_file_atomic(out / "saccades.jsonl", format_saccades_jsonl(ev.saccades));
      std::printf("%zu fixations, %zu saccades\n", ev.fixations.size(), ev.saccades.size());
    } else if (*features) {
      const auto ref = session_ref(ft_session);
      SessionStore store(ref.root);
      const auto fx = store.fixations(ref.id);
      const auto sc = store.saccades(ref.id);
      const auto layout = store.bundle(ref.id).layout;
      const double end_ms = fx.empty() ? 0.0 : fx.back().end_ms + 1.0;
      std::vector<FeatureVector> rows;
      std::vector<std::string> keys;
      for (const auto& w : slide_time_windows({}, end_ms, ft_window, ft_stride, ref.id)) {
        rows.push_back(window_features(fx, sc, layout, w.t0_ms, w.t1_ms));
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", w.t0_ms);
        keys.emplace_back(buf);
      }
      write_output(ft_out, format_feature_table(rows, keys, "t0_ms"));
    } else if (*synth) {
      SessionSpec spec;
      spec.include_instructed = sy_instructed;
      write_corpus(sy_out, generate_corpus(sy_participants, spec, g.seed));
    } else if (*train) {
      const auto sessions = load_corpus_dir(tr_corpus);
      if (tr_model == "rules") {
        save_model(tr_out, json(RegionRules{}), "rules");
      } else if (tr_model == "softmax") {
        const auto wc = prepare_windows(sessions, tr_window);
        save_model(tr_out, json(train_softmax(wc.time_features, wc.time_labels)), "softmax");
      } else {
        const auto wc = prepare_windows(sessions);
        // The last participant (sorted) is held out for early stopping.
        std::vector<std::string> ids;
        for (const auto& w : wc.fixation_windows) ids.push_back(w.participant_id);
        std::sort(ids.begin(), ids.end());
        if (ids.empty()) fail(ErrorCode::EmptySample, "corpus has no labeled fixation windows");
        const std::string held = ids.back();
        std::vector<cnn::WindowSample> tr, va;
        for (const auto& w : wc.fixation_windows) (w.participant_id == held ? va : tr).push_back(w);
        auto cfg = ComparisonConfig::default_cnn_config();
        cfg.seed = g.seed;
        cfg.max_epochs = tr_epochs;
        cfg.max_per_class = tr_per_class;
        const auto res = tr_model == "cnn2d" ? cnn::train_2d(tr, va, cfg) : cnn::train_1d(tr, va, cfg);
        cnn::save_checkpoint(tr_out, res.net);
        if (!tr_history.empty()) write_file_atomic(tr_history, cnn::format_history_csv(res.history));
        std::printf("best epoch %d of %zu\n", res.best_epoch, res.history.size());
      }
    } else if (*eval) {
      ComparisonConfig cfg;
      cfg.seed = g.seed;
      cfg.window_s = ev_window;
      cfg.models.clear();
      std::stringstream ss(ev_models);
      for (std::string m; std::getline(ss, m, ',');) {
        if (m != "random" && m != "majority" && m != "softmax" && m != "cnn1d" && m != "cnn2d") {
          std::cerr << "unknown model '" << m << "'\n";
          return kExitUsage;
        }
        cfg.models.push_back(m);
      }
      cfg.progress = [](const std::string& msg) { std::cerr << msg << "\n"; };
      const auto report = model_comparison(load_corpus_dir(ev_corpus), cfg);
      std::cout << format_comparison_table(report);
      if (const auto* top = report.find("cnn2d")) std::cout << "\ncnn2d confusion\n" << format_confusion(top->pooled);
      if (!ev_json.empty()) write_file_atomic(ev_json, json(report).dump(2) + "\n");
      if (ev_assert) {
        std::string why;
        if (!ordering_holds(report, &why)) {
          std::cerr << "ordering assertion failed: " << why << "\n";
          return kExitAssert;
        }
      }
    } else if (*stats) {
      const auto pts = segment_points(load_corpus_dir(st_corpus));
      std::vector<std::pair<std::string, std::string>> pairs;
      std::stringstream ss(st_by);
      for (std::string item; std::getline(ss, item, ',');) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) fail(ErrorCode::InvalidConfig, "--by expects A:B pairs, got '" + item + "'");
        pairs.emplace_back(item.substr(0, colon), item.substr(colon + 1));
      }
      std::string report;
      if (st_test == "hotelling" && pairs.empty()) {
        std::vector<Eigen::MatrixXd> groups;
        std::vector<std::string> names;
        for (auto l : kAllBehaviors) {
          groups.push_back(framework_matrix(pts, l));
          names.emplace_back(to_string(l));
        }
        report = format_pairwise_matrix(hotelling_pairwise(groups, names));
      } else {
        if (pairs.empty()) fail(ErrorCode::InvalidConfig, "--by is required for " + st_test);
        const std::string metric = !st_metric.empty() ? st_metric : st_test == "ttest" ? "fbsr" : "wpm";
        std::vector<TestResult> results;
        std::vector<std::string> names;
        for (const auto& [a, b] : pairs) {
          const auto [la, ca] = parse_group(a);
          const auto [lb, cb] = parse_group(b);
          if (st_test == "hotelling") {
            results.push_back(hotelling_t2(framework_matrix(pts, la, ca), framework_matrix(pts, lb, cb)));
          } else {
            const auto va = column_values(pts, la, ca, metric);
            const auto vb = column_values(pts, lb, cb, metric);
            results.push_back(st_test == "ttest" ? t_test_ind(va, vb) : mann_whitney_u(va, vb));
          }
          names.push_back(a + " vs " + b + (st_test == "hotelling" ? "" : " (" + metric + ")"));
        }
        bonferroni(results);
        report = format_test_table(results, names);
      }
      write_output(st_out, report);
    } else if (*irr) {
      const auto ref = session_ref(irr_session);
      SessionStore store(ref.root);
      const auto r = store.irr(ref.id);
      if (r.kappa) {
        std::printf("kappa\t%.4f\n", *r.kappa);
      } else {
        std::printf("kappa\tNA\n");
      }
      std::printf("dual_labeled\t%zu\nagreements\t%zu\n", r.dual_labeled, r.agreements);
      if (!r.disagreements.empty()) std::cout << "disagreements\n" << format_annotation_table(r.disagreements);
    } else if (*exp) {
      const auto ref = session_ref(ex_session);
      SessionStore store(ref.root);
      write_output(ex_out, store.export_annotation_table(ref.id));
    } else if (*render) {
      const auto ref = session_ref(rd_session);
      SessionStore store(ref.root);
      rd_cfg.draw_word_boxes = rd_boxes;
      const auto fx = store.fixations(ref.id, rd_from, rd_to);
      const auto layout = store.bundle(ref.id).layout;
      const auto img = render_window(fx, rd_cfg, &layout);
      write_png(rd_out, img);
      if (!rd_raw.empty()) write_raw(rd_raw, img);
    } else if (*serve) {
      SessionStore store(sv_data);
      AnnotationService svc(store);
      const int port = svc.bind(sv_host, sv_port);
      std::printf("listening on http://%s:%d\n", sv_host.c_str(), port);
      std::fflush(stdout);
      svc.run();
    }
  } catch (const Error& e) {
    if (g.json) {
      std::cerr << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return kExitData;
  } catch (const std::exception& e) {
    if (g.json) {
      std::cerr << json{{"error", "Io"}, {"message", e.what()}}.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return kExitData;
  }
  return kExitOk;
}
