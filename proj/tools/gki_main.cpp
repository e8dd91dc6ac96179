// gki command-line entry point.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gki/eval.hpp"
#include "gki/theory_lab.hpp"
#include "gki/trainer.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace gki::cli {

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Every TrainConfig field is a flag. Flags given on the command line override
// the --config file, which overrides the built-in defaults.
struct TrainFlags {
  TrainConfig values;
  std::string pinv_mode = to_string(values.pinv_mode);
  std::string negatives = to_string(values.negatives);
  std::string transform = to_string(values.edge_transform);
  std::string adjacency = to_string(values.adjacency);
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> setters;

  template <class T>
  void bind(CLI::App* app, const std::string& name, T TrainConfig::*field, const std::string& help) {
    CLI::Option* o = app->add_option(name, values.*field, help)->capture_default_str();
    setters.emplace_back(o, [this, field](TrainConfig& c) { c.*field = values.*field; });
  }

  void bind_enum(CLI::App* app, const std::string& name, std::string& slot,
                 const std::vector<std::string>& choices,
                 std::function<void(TrainConfig&, const std::string&)> apply) {
    CLI::Option* o =
        app->add_option(name, slot)->capture_default_str()->check(CLI::IsMember(choices));
    setters.emplace_back(o, [&slot, apply](TrainConfig& c) { apply(c, slot); });
  }

  void attach(CLI::App* app, bool with_io_paths) {
    app->add_option("--config", config_path, "flat JSON config file; flags override it");
    bind(app, "--seed", &TrainConfig::seed, "random seed");
    bind(app, "--epochs", &TrainConfig::epochs, "training epochs");
    bind(app, "--batch-size", &TrainConfig::batch_size, "graphs per mini-batch");
    bind(app, "--lr", &TrainConfig::lr, "Adam learning rate");
    bind(app, "--layers", &TrainConfig::layers, "GCN layers L");
    bind(app, "--hidden", &TrainConfig::hidden, "GCN hidden size d");
    bind(app, "--clusters", &TrainConfig::clusters, "landmarks per layer K");
    bind(app, "--head-hidden", &TrainConfig::head_hidden, "projection head hidden size");
    bind(app, "--head-out", &TrainConfig::head_out, "projection output size");
    bind(app, "--temperature", &TrainConfig::temperature, "NT-Xent temperature");
    bind(app, "--sphere-radius", &TrainConfig::sphere_radius, "sphere radius r");
    bind(app, "--clamp-eps", &TrainConfig::clamp_eps, "arccos clamp epsilon");
    bind_enum(app, "--pinv-mode", pinv_mode, {"identity", "pinv", "pinv_sqrt"},
              [](TrainConfig& c, const std::string& s) { c.pinv_mode = parse_pinv_mode(s); });
    bind_enum(app, "--negatives-mode", negatives, {"batch", "self_only"},
              [](TrainConfig& c, const std::string& s) { c.negatives = parse_negatives_mode(s); });
    bind_enum(app, "--edge-transform", transform, {"raw", "log1p", "binary"},
              [](TrainConfig& c, const std::string& s) { c.edge_transform = parse_edge_transform(s); });
    bind_enum(app, "--adjacency", adjacency, {"symmetric", "directed"},
              [](TrainConfig& c, const std::string& s) { c.adjacency = parse_adjacency_mode(s); });
    if (with_io_paths) {
      bind(app, "--log", &TrainConfig::log_path, "training log CSV (default: <out>.log.csv)");
    }
  }

  TrainConfig resolve() const {
    TrainConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw DataError("cannot open config " + config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw DataError("config " + config_path + ": " + e.what());
      }
      cfg = TrainConfig::from_json(j, cfg);
    }
    for (const auto& [opt, apply] : setters) {
      if (opt->count() > 0) apply(cfg);
    }
    cfg.validate();
    return cfg;
  }
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

std::string sibling(const std::string& path, const std::string& name) {
  const fs::path p(path);
  return (p.has_parent_path() ? p.parent_path() / name : fs::path(name)).string();
}

std::vector<PatientGraph> load_graphs(const std::string& graphs_path, const std::string& vocab_path,
                                      Vocabulary* vocab_out = nullptr) {
  auto vin = open_in(vocab_path);
  const Vocabulary vocab = Vocabulary::load(vin);
  auto gin = open_in(graphs_path);
  auto graphs = read_graphs(gin, vocab);
  if (vocab_out != nullptr) *vocab_out = vocab;
  return graphs;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_summary(const EvalReport& r) {
  std::cout << r.task << " folds=" << r.records.size() << " skipped=" << r.skipped();
  for (const char* m : {"auroc", "f1_macro", "precision_at_1", "precision_at_10"}) {
    if (auto s = r.summary(m)) std::cout << ' ' << m << '=' << fmt(s->mean) << "+-" << fmt(s->std);
  }
  std::cout << '\n';
}

struct Finish {
  RunManifest manifest;
  std::string manifest_path;
};

int run(const std::vector<std::string>& args);

int run_app(const std::vector<std::string>& args) {
  CLI::App app{"Graph kernel contrastive pre-training for patient EHR graphs", "gki"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every command");

  Finish finish;
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic cohort (JSON-lines)");
  std::uint64_t synth_seed = 1;
  int synth_n = 200;
  std::string synth_out;
  synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();
  synth->add_option("--n", synth_n, "number of patients")->capture_default_str();
  synth->add_option("--out", synth_out, "output cohort JSON-lines")->required();
  synth->callback([&] {
    action = [&] {
      const auto records = synthesize_cohort(synth_seed, synth_n);
      {
        auto out = open_out(synth_out);
        write_records(out, records);
      }
      finish.manifest.config = {{"seed", synth_seed}, {"n", synth_n}};
      finish.manifest.seed = synth_seed;
      finish.manifest.add_output(synth_out);
      finish.manifest_path = manifest_path_for(synth_out);
      std::cout << "wrote " << records.size() << " records to " << synth_out << '\n';
    };
  });

  // build-graphs
  auto* build = app.add_subcommand("build-graphs", "turn patient records into patient graphs");
  std::string build_in, build_out, build_vocab_out, build_vocab_in;
  bool literal = false;
  build->add_option("--in", build_in, "cohort JSON-lines")->required();
  build->add_option("--out", build_out, "graph JSON-lines")->required();
  build->add_option("--vocab-out", build_vocab_out, "vocabulary to write (default: vocab.txt beside --out)");
  build->add_option("--vocab", build_vocab_in, "reuse an existing vocabulary instead of building one");
  build->add_flag("--literal-first-visit", literal,
                  "omit first-visit diagnosis->drug edges (literal pseudocode mode)");
  build->callback([&] {
    action = [&] {
      auto in = open_in(build_in);
      const auto records = parse_records(in);
      Vocabulary vocab;
      if (!build_vocab_in.empty()) {
        auto vin = open_in(build_vocab_in);
        vocab = Vocabulary::load(vin);
      } else {
        vocab = Vocabulary::from_records(records);
      }
      BuildOptions opt;
      opt.connect_first_visit_drugs = !literal;
      std::vector<PatientGraph> graphs;
      for (const auto& r : records) graphs.push_back(build_graph(r, vocab, opt));
      {
        auto out = open_out(build_out);
        write_graphs(out, graphs);
      }
      const std::string vocab_path =
          build_vocab_out.empty() ? sibling(build_out, "vocab.txt") : build_vocab_out;
      if (build_vocab_in.empty() || !build_vocab_out.empty()) {
        auto vout = open_out(vocab_path);
        vocab.save(vout);
      }
      finish.manifest.config = {{"connect_first_visit_drugs", !literal}};
      finish.manifest.add_input(build_in);
      if (!build_vocab_in.empty()) finish.manifest.add_input(build_vocab_in);
      finish.manifest.add_output(build_out);
      if (build_vocab_in.empty() || !build_vocab_out.empty()) finish.manifest.add_output(vocab_path);
      finish.manifest_path = manifest_path_for(build_out);
      if (!graphs.empty()) {
        const auto st = graph_stats(graphs);
        std::cout << "graphs=" << st.count << " max_nodes=" << st.max_nodes
                  << " avg_nodes=" << fmt(st.avg_nodes) << " max_edges=" << st.max_edges
                  << " avg_edges=" << fmt(st.avg_edges) << " vocab=" << vocab.size() << '\n';
      }
    };
  });

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "self-supervised pre-training");
  TrainFlags pre_flags;
  std::string pre_in, pre_vocab, pre_out, pre_resume;
  pre->add_option("--in", pre_in, "graph JSON-lines")->required();
  pre->add_option("--vocab", pre_vocab, "vocabulary (default: vocab.txt beside --in)");
  pre->add_option("--out", pre_out, "checkpoint path (previous one kept as <out>.prev)")->required();
  pre->add_option("--resume", pre_resume, "continue from this checkpoint for --epochs more epochs");
  pre_flags.attach(pre, true);
  pre->callback([&] {
    action = [&] {
      TrainConfig cfg = pre_flags.resolve();
      const std::string vocab_path = pre_vocab.empty() ? sibling(pre_in, "vocab.txt") : pre_vocab;
      const auto graphs = load_graphs(pre_in, vocab_path);
      cfg.checkpoint_path = pre_out;
      if (cfg.log_path.empty()) cfg.log_path = pre_out + ".log.csv";
      if (fs::path(pre_out).has_parent_path()) fs::create_directories(fs::path(pre_out).parent_path());
      const TrainState state = pre_resume.empty() ? pretrain(graphs, cfg) : resume(pre_resume, graphs, cfg);
      write_checkpoint(pre_out, make_checkpoint(state, cfg, graphs.front().feature_dim));
      finish.manifest.config = cfg.to_json();
      finish.manifest.seed = cfg.seed;
      finish.manifest.add_input(pre_in);
      finish.manifest.add_input(vocab_path);
      if (!pre_resume.empty()) finish.manifest.add_input(pre_resume);
      finish.manifest.add_output(pre_out);
      finish.manifest.logs.push_back(cfg.log_path);
      finish.manifest_path = manifest_path_for(pre_out);
      std::cout << "epochs=" << state.epochs_completed;
      if (!state.log.epochs.empty()) {
        const auto& first = state.log.epochs.front();
        const auto& last = state.log.epochs.back();
        std::cout << " first_loss=" << fmt(first.total) << " last_loss=" << fmt(last.total);
      }
      std::cout << " checkpoint=" << pre_out << '\n';
    };
  });

  // embed
  auto* emb = app.add_subcommand("embed", "frozen graph embeddings [phi_E, phi_S]");
  std::string emb_model, emb_in, emb_vocab, emb_out;
  bool emb_random = false;
  emb->add_option("--model", emb_model, "checkpoint from pretrain")->required();
  emb->add_option("--in", emb_in, "graph JSON-lines")->required();
  emb->add_option("--vocab", emb_vocab, "vocabulary (default: vocab.txt beside --in)");
  emb->add_option("--out", emb_out, "embedding JSON-lines")->required();
  emb->add_flag("--random-init", emb_random,
                "ignore trained weights and use the checkpoint config's initialisation");
  emb->callback([&] {
    action = [&] {
      int input_dim = 0;
      auto [params, cfg] = load_model(emb_model, &input_dim);
      const std::string vocab_path = emb_vocab.empty() ? sibling(emb_in, "vocab.txt") : emb_vocab;
      const auto graphs = load_graphs(emb_in, vocab_path);
      const ModelConfig mc = cfg.model_config(input_dim);
      if (emb_random) params = ModelParams::init(mc, cfg.seed);
      const auto embeddings = embed(params, mc, graphs);
      {
        auto out = open_out(emb_out);
        write_embeddings(out, embeddings);
      }
      finish.manifest.config = cfg.to_json();
      finish.manifest.config["random_init"] = emb_random;
      finish.manifest.seed = cfg.seed;
      finish.manifest.add_input(emb_model);
      finish.manifest.add_input(emb_in);
      finish.manifest.add_input(vocab_path);
      finish.manifest.add_output(emb_out);
      finish.manifest_path = manifest_path_for(emb_out);
      std::cout << "embedded " << embeddings.size() << " graphs, dim="
                << (embeddings.empty() ? 0 : embeddings.front().vector.size()) << '\n';
    };
  });

  // eval-classify / eval-similar
  struct EvalFlags {
    std::string in, out, csv;
    CvOptions cv;
  };
  EvalFlags ev_c, ev_s;
  auto add_eval = [&](const std::string& name, const std::string& help, EvalFlags& f, EvalTask task) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--in", f.in, "embedding JSON-lines")->required();
    sub->add_option("--out", f.out, "EvalReport JSON")->required();
    sub->add_option("--csv", f.csv, "EvalReport CSV (default: <out>.csv)");
    sub->add_option("--repeats", f.cv.repeats, "CV repeats")->capture_default_str();
    sub->add_option("--folds", f.cv.folds, "CV folds")->capture_default_str();
    sub->add_option("--seed", f.cv.seed, "fold-assignment seed")->capture_default_str();
    sub->callback([&, task] {
      action = [&, task] {
        auto in = open_in(f.in);
        const auto embeddings = read_embeddings(in);
        const EvalReport report = repeated_cv(embeddings, task, f.cv);
        const std::string csv = f.csv.empty() ? f.out + ".csv" : f.csv;
        {
          auto out = open_out(f.out);
          out << report.to_json().dump(2) << '\n';
          auto cout_csv = open_out(csv);
          report.write_csv(cout_csv);
        }
        finish.manifest.config = {{"task", to_string(task)},
                                  {"repeats", f.cv.repeats},
                                  {"folds", f.cv.folds},
                                  {"seed", f.cv.seed}};
        finish.manifest.seed = f.cv.seed;
        finish.manifest.add_input(f.in);
        finish.manifest.add_output(f.out);
        finish.manifest.add_output(csv);
        finish.manifest_path = manifest_path_for(f.out);
        print_summary(report);
      };
    });
  };
  add_eval("eval-classify", "logistic regression under repeated stratified CV", ev_c, EvalTask::classify);
  add_eval("eval-similar", "inner-product top-K retrieval under repeated stratified CV", ev_s,
           EvalTask::similarity);

  // verify-theory
  auto* vt = app.add_subcommand("verify-theory", "numerical checks of the geometric claims");
  std::uint64_t vt_seed = 7;
  std::string vt_out = "theory";
  int vt_dim = 3;
  vt->add_option("--seed", vt_seed, "random seed")->capture_default_str();
  vt->add_option("--out-dir", vt_out, "directory for bound_report.csv")->capture_default_str();
  vt->add_option("--dim", vt_dim, "ambient dimension for sphere samples")->capture_default_str();
  int vt_status = 0;
  vt->callback([&] {
    action = [&] {
      const std::vector<double> ms = {1e-4, 3e-4, 1e-3, 2e-3, 3e-3, 5e-3, 1e-2, 2e-2,
                                      3e-2, 5e-2, 1e-1, 0.2,  0.5,  1.0,  2.0};
      const auto sample = sample_sphere_pairs(vt_seed, 1.0, vt_dim, ms);
      const auto rep = verify_theorem1(sample);
      const std::string csv = (fs::path(vt_out) / "bound_report.csv").string();
      {
        auto out = open_out(csv);
        rep.write_csv(out);
      }
      auto line = [&](bool ok, const std::string& text) {
        std::cout << (ok ? "PASS " : "FAIL ") << text << '\n';
        if (!ok) vt_status = kExitNumeric;
      };
      line(rep.chord_ok, "theorem1 chord d_E <= d_S: max violation " + fmt(rep.max_chord_violation));
      line(rep.lower_ok && rep.bound_ok, "theorem1 bound d_S - d_E in [0, c3 m^3], c3=" + fmt(rep.c3));
      line(rep.slope_ok, "theorem1 log-log slope " + fmt(rep.slope) + " in [2.8, 3.2]");
      Rng rng = Rng(vt_seed).stream("psd");
      for (int n : {8, 32, 64}) {
        Matrix pts(n, vt_dim);
        for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
        const auto pe = verify_psd(pts, KernelKind::euclidean);
        line(pe.pass, "psd euclidean n=" + std::to_string(n) + " min_eig=" + fmt(pe.min_eigenvalue));
        pts.rowwise().normalize();
        const auto ps = verify_psd(pts, KernelKind::spherical);
        line(ps.pass, "psd spherical n=" + std::to_string(n) + " min_eig=" + fmt(ps.min_eigenvalue));
      }
      Matrix ray(4, vt_dim);
      ray.setZero();
      for (int i = 0; i < 4; ++i) ray(i, 0) = 1.0 + i * (i + 1) * 0.5;
      ray(3, 0) = 10.0;
      const auto flips = nn_perturbation_demo(ray, Matrix());
      std::cout << "INFO 1-NN flips on a ray configuration: " << flips.flips << "/" << flips.n << '\n';
      finish.manifest.config = {{"seed", vt_seed}, {"dim", vt_dim}};
      finish.manifest.seed = vt_seed;
      finish.manifest.add_output(csv);
      finish.manifest_path = manifest_path_for(csv);
    };
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "landmark-count and multiplier-mode sweep");
  TrainFlags sw_flags;
  std::string sw_in, sw_vocab, sw_out, sw_k = "16,32,64", sw_modes = "identity";
  CvOptions sw_cv;
  sw->add_option("--in", sw_in, "graph JSON-lines")->required();
  sw->add_option("--vocab", sw_vocab, "vocabulary (default: vocab.txt beside --in)");
  sw->add_option("--out", sw_out, "sweep CSV, one EvalReport row per configuration")->required();
  sw->add_option("--k-list", sw_k, "comma-separated landmark counts")->capture_default_str();
  sw->add_option("--pinv-modes", sw_modes, "comma-separated multiplier modes")->capture_default_str();
  sw->add_option("--repeats", sw_cv.repeats, "CV repeats")->capture_default_str();
  sw->add_option("--folds", sw_cv.folds, "CV folds")->capture_default_str();
  sw->add_option("--cv-seed", sw_cv.seed, "fold-assignment seed")->capture_default_str();
  sw_flags.attach(sw, false);
  sw->callback([&] {
    action = [&] {
      const TrainConfig base = sw_flags.resolve();
      const std::string vocab_path = sw_vocab.empty() ? sibling(sw_in, "vocab.txt") : sw_vocab;
      const auto graphs = load_graphs(sw_in, vocab_path);
      const int input_dim = graphs.at(0).feature_dim;
      auto out = open_out(sw_out);
      out << "clusters,pinv_mode,final_loss,auroc_mean,auroc_std,f1_macro_mean,f1_macro_std,skipped_folds\n";
      json rows = json::array();
      for (const auto& k_str : split_list(sw_k)) {
        for (const auto& mode : split_list(sw_modes)) {
          TrainConfig cfg = base;
          try {
            cfg.clusters = std::stoi(k_str);
          } catch (const std::exception&) {
            throw DataError("bad --k-list entry '" + k_str + "'");
          }
          cfg.pinv_mode = parse_pinv_mode(mode);
          cfg.checkpoint_path.clear();
          cfg.log_path.clear();
          cfg.validate();
          TrainState state = pretrain(graphs, cfg);
          const ModelConfig mc = cfg.model_config(input_dim);
          const auto report = repeated_cv(embed(state.params, mc, graphs), EvalTask::classify, sw_cv);
          const auto au = report.summary("auroc");
          const auto f1 = report.summary("f1_macro");
          const double loss = state.log.epochs.empty() ? 0.0 : state.log.epochs.back().total;
          char buf[512];
          std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", cfg.clusters,
                        mode.c_str(), loss, au ? au->mean : 0.0, au ? au->std : 0.0,
                        f1 ? f1->mean : 0.0, f1 ? f1->std : 0.0, report.skipped());
          out << buf;
          std::cout << "K=" << cfg.clusters << " pinv_mode=" << mode << ' ';
          print_summary(report);
        }
      }
      out.close();
      finish.manifest.config = base.to_json();
      finish.manifest.config["k_list"] = sw_k;
      finish.manifest.config["pinv_modes"] = sw_modes;
      finish.manifest.seed = base.seed;
      finish.manifest.add_input(sw_in);
      finish.manifest.add_input(vocab_path);
      finish.manifest.add_output(sw_out);
      finish.manifest_path = manifest_path_for(sw_out);
    };
  });

  // replay
  auto* rp = app.add_subcommand("replay", "re-run a manifest and compare output hashes");
  std::string rp_manifest;
  rp->add_option("--manifest", rp_manifest, "run manifest JSON")->required();
  int rp_status = 0;
  rp->callback([&] {
    action = [&] {
      const RunManifest m = read_manifest(rp_manifest);
      std::vector<std::string> args2 = m.argv;
      if (args2.empty()) throw DataError("manifest has an empty argv");
      if (m.command == "replay") throw DataError("refusing to replay a replay");
      const int code = run(args2);
      if (code != 0) {
        rp_status = code;
        return;
      }
      for (const auto& f : m.outputs) {
        const bool same = git_blob_sha1_file(f.path) == f.sha1;
        std::cout << (same ? "identical " : "differs ") << f.path << '\n';
        if (!same) rp_status = kExitData;
      }
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "gki: error kind=usage code=" << kExitUsage << ": " << e.what() << '\n';
    return kExitUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  action();
  finish.manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto* sub : app.get_subcommands()) finish.manifest.command = sub->get_name();
  finish.manifest.argv = args;
  if (!finish.manifest_path.empty()) write_manifest(finish.manifest_path, finish.manifest);
  if (vt_status != 0) return vt_status;
  return rp_status;
}

int run(const std::vector<std::string>& args) {
  auto fail = [](const char* kind, int code, const std::string& msg) {
    std::string one_line = msg;
    for (char& c : one_line) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    std::cerr << "gki: error kind=" << kind << " code=" << code << ": " << one_line << '\n';
    return code;
  };
  try {
    return run_app(args);
  } catch (const NumericError& e) {
    return fail("numeric", kExitNumeric, e.what());
  } catch (const DataError& e) {
    return fail("data", kExitData, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail("data", kExitData, e.what());
  } catch (const std::exception& e) {
    return fail("data", kExitData, e.what());
  }
}

}  // namespace

}  // namespace gki::cli

int main(int argc, char** argv) {
  return gki::cli::run(std::vector<std::string>(argv, argv + argc));
}
