// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run all criteria
//   acceptance --only 3,7      run a subset
//   acceptance --memory-probe B MODE   (internal) one training step, prints peak RSS

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "gki/eval.hpp"
#include "gki/optim.hpp"
#include "gki/theory_lab.hpp"
#include "gki/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gki;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json load_manifest() {
  std::ifstream in(GKI_ACCEPTANCE_MANIFEST);
  if (!in) throw DataError("cannot open acceptance manifest " GKI_ACCEPTANCE_MANIFEST);
  return json::parse(in);
}

std::vector<PatientGraph> synthetic_graphs(std::uint64_t seed, int n) {
  const auto records = synthesize_cohort(seed, n);
  const auto vocab = Vocabulary::from_records(records);
  std::vector<PatientGraph> out;
  for (const auto& r : records) out.push_back(build_graph(r, vocab));
  return out;
}

// ---------------------------------------------------------------- 1

struct GradTally {
  int checked = 0;
  std::vector<std::string> failed;
  double rtol = 1e-4, h = 1e-5;

  // grad_check of sum(out ∘ R) for a fixed random R
  void run(const std::string& name, std::vector<Param*> params, const std::function<ad::Var()>& build,
           std::uint64_t seed) {
    Rng rng(seed * 7919 + 17);
    Matrix weights;
    const auto rep = grad_check(
        [&](bool with_grad) {
          const ad::Var out = build();
          if (weights.size() == 0)
            weights = oracle::random_matrix(rng, static_cast<int>(out.rows()), static_cast<int>(out.cols()));
          const ad::Var r = ad::sum(ad::hadamard(out, ad::constant(weights)));
          if (with_grad) ad::backward(r);
          return r.scalar();
        },
        params, rtol, h);
    ++checked;
    if (!rep.pass) failed.push_back(name + "@seed" + std::to_string(seed) + "(" + rep.worst_param + ")");
  }
};

Outcome gradient_contract(const json& m) {
  GradTally t;
  t.rtol = m.at("rtol");
  t.h = m.at("step");
  const int seeds = m.at("seeds");
  for (int s = 1; s <= seeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    Rng rng(seed);
    const auto g = oracle::random_graph(rng, "g", 5, 6);
    const auto adj = normalize_adjacency(g);
    Param x("x", oracle::random_matrix(rng, 5, 6));
    Param w0("w0", oracle::random_matrix(rng, 6, 4)), w1("w1", oracle::random_matrix(rng, 4, 4));
    Param a0("a0", Matrix::Constant(1, 1, 0.25)), a1("a1", Matrix::Constant(1, 1, -0.3));
    t.run("gcn_forward", {&x, &w0, &w1, &a0, &a1}, [&] {
      return gcn_forward(ad::leaf(x), adj, {ad::leaf(w0), ad::leaf(w1)}, {ad::leaf(a0), ad::leaf(a1)})[1];
    }, seed);
    t.run("prelu", {&x, &a0}, [&] { return ad::prelu(ad::leaf(x), ad::leaf(a0)); }, seed);

    Param z("z", oracle::random_matrix(rng, 4, 6));
    t.run("sparsemax", {&z}, [&] { return ad::sparsemax_rows(ad::leaf(z)); }, seed);

    Param h("h", oracle::random_matrix(rng, 5, 4)), c("c", oracle::random_matrix(rng, 3, 4));
    t.run("clustering_loss", {&h, &c}, [&] {
      const ad::Var hv = ad::leaf(h), cv = ad::leaf(c);
      return clustering_loss({hv}, {cluster_assign(hv, cv)}, {cv});
    }, seed);

    for (auto mode : {PinvMode::identity, PinvMode::pinv, PinvMode::pinv_sqrt}) {
      KernelConfig kc;
      kc.pinv_mode = mode;
      for (auto kind : {KernelKind::euclidean, KernelKind::spherical}) {
        const std::string name = std::string("nystrom_map/") + (kind == KernelKind::euclidean ? "E/" : "S/") +
                                 to_string(mode);
        t.run(name, {&h, &c}, [&] { return nystrom_map(ad::leaf(h), ad::leaf(c), kind, kc); }, seed);
      }
      Param h2("h2", oracle::random_matrix(rng, 5, 4)), c2("c2", oracle::random_matrix(rng, 3, 4));
      t.run("graph_map/" + to_string(mode), {&h, &h2, &c, &c2}, [&] {
        const auto v = make_views({ad::leaf(h), ad::leaf(h2)}, {ad::leaf(c), ad::leaf(c2)}, kc);
        return ad::concat_cols({v.graph_euclidean, v.graph_spherical});
      }, seed);
    }

    auto head = ProjectionHead::init("head", 4, 5, 3, rng);
    auto hp = head.params();
    hp.push_back(&h);
    t.run("projection_head", hp, [&] { return bind(head)(ad::leaf(h)); }, seed);

    Param ze("ze", oracle::random_matrix(rng, 3, 3)), zs("zs", oracle::random_matrix(rng, 3, 3));
    Param ge0("ge0", oracle::random_matrix(rng, 1, 3)), gs0("gs0", oracle::random_matrix(rng, 1, 3));
    Param ge1("ge1", oracle::random_matrix(rng, 1, 3)), gs1("gs1", oracle::random_matrix(rng, 1, 3));
    LossConfig lc;
    lc.temperature = 0.5;
    t.run("nt_xent", {&ze, &zs, &ge0, &gs0, &ge1, &gs1}, [&] {
      const ProjectedViews v0{ad::leaf(ze), ad::leaf(zs), ad::leaf(ge0), ad::leaf(gs0)};
      const ProjectedViews v1{ad::constant(Matrix::Ones(1, 3)), ad::constant(Matrix::Ones(1, 3)), ad::leaf(ge1),
                              ad::leaf(gs1)};
      const auto ctx = make_batch_context({v0, v1});
      return ad::add(node_graph_loss(v0, 0, ctx, lc), graph_graph_loss(ctx, lc));
    }, seed);

    // whole model on a two-graph batch, both negatives modes
    ModelConfig mc;
    mc.input_dim = 6;
    mc.hidden = 3;
    mc.clusters = 3;
    mc.head_hidden = 4;
    mc.head_out = 3;
    const auto ga = oracle::random_graph(rng, "a", 3, 6), gb = oracle::random_graph(rng, "b", 4, 6);
    const std::vector<PreparedGraph> prepared{prepare_graph(ga, mc), prepare_graph(gb, mc)};
    for (auto neg : {NegativesMode::batch, NegativesMode::self_only}) {
      lc.negatives = neg;
      auto params = ModelParams::init(mc, seed);
      t.run("total_loss/" + to_string(neg), params.all(), [&] {
        const auto bound = bind_model(params, mc.kernel, true);
        std::vector<ProjectedViews> views;
        ad::Var rec;
        for (const auto& pg : prepared) {
          const auto pass = forward_graph(pg, bound, mc.kernel);
          views.push_back(project(pass.views, bound.node_head, bound.graph_head));
          rec = rec ? ad::add(rec, pass.rec) : pass.rec;
        }
        const auto ctx = make_batch_context(views);
        const ad::Var ng = ad::add(node_graph_loss(views[0], 0, ctx, lc), node_graph_loss(views[1], 1, ctx, lc));
        return total_loss(ng, graph_graph_loss(ctx, lc), rec, lc).total;
      }, seed);
    }
  }
  std::string detail = std::to_string(t.checked - static_cast<int>(t.failed.size())) + "/" +
                       std::to_string(t.checked) + " checks";
  for (const auto& f : t.failed) detail += " " + f;
  return {t.failed.empty(), detail};
}

// ---------------------------------------------------------------- 2

Outcome chord_bound(const json& m) {
  const std::vector<double> grid = m.at("m_values");
  const double max_violation = m.at("max_chord_violation");
  const double lo = m.at("slope_range")[0], hi = m.at("slope_range")[1];
  bool ok = true;
  double worst_violation = 0, smin = 1e9, smax = -1e9;
  for (int s = 1; s <= m.at("seeds").get<int>(); ++s) {
    const auto r = verify_theorem1(sample_sphere_pairs(static_cast<std::uint64_t>(s), 1.0, 3, grid));
    worst_violation = std::max(worst_violation, r.max_chord_violation);
    smin = std::min(smin, r.slope);
    smax = std::max(smax, r.slope);
    ok = ok && r.max_chord_violation <= max_violation && r.slope >= lo && r.slope <= hi && r.pass();
  }
  const double spot_m = m.at("spot_m");
  const auto spot = sample_sphere_pairs(1, 1.0, 3, {spot_m}).pairs.at(0);
  const double gap = spot.m - (spot.x - spot.y).norm();
  const bool spot_ok = std::abs(gap - m.at("spot_gap").get<double>()) <= m.at("spot_tolerance").get<double>();
  return {ok && spot_ok, "slopes in [" + fmt("%.4f", smin) + ", " + fmt("%.4f", smax) + "], max violation " +
                             fmt("%.1e", worst_violation) + ", m-d_E at 0.1 = " + fmt("%.6e", gap)};
}

// ---------------------------------------------------------------- 3

Outcome kernel_psd(const json& m) {
  const double floor = m.at("min_eigenvalue");
  const int dim = m.at("dim");
  double worst_e = 1e9, worst_s = 1e9;
  int runs = 0;
  for (int s = 1; s <= m.at("seeds").get<int>(); ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    for (int n : m.at("sizes").get<std::vector<int>>()) {
      worst_e = std::min(worst_e, verify_psd(oracle::random_matrix(rng, n, dim), KernelKind::euclidean).min_eigenvalue);
      Matrix u = oracle::random_matrix(rng, n, dim);
      u.rowwise().normalize();
      worst_s = std::min(worst_s, verify_psd(u, KernelKind::spherical).min_eigenvalue);
      runs += 2;
    }
  }
  return {worst_e >= floor && worst_s >= floor, std::to_string(runs) + " Gram matrices, min eig k_E " +
                                                     fmt("%.3e", worst_e) + ", k_S " + fmt("%.3e", worst_s)};
}

// ---------------------------------------------------------------- 4

Outcome nystrom_recovery(const json& m) {
  const double tol = m.at("tolerance");
  const int max_n = m.at("max_points");
  double worst = 0;
  for (int s = 1; s <= m.at("seeds").get<int>(); ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    const int n = 4 + (s * 7) % (max_n - 3);
    const Matrix pts = oracle::random_matrix(rng, n, 3);
    KernelConfig cfg;
    cfg.pinv_mode = PinvMode::pinv_sqrt;
    for (auto kind : {KernelKind::euclidean, KernelKind::spherical}) {
      const Matrix f = nystrom_map(ad::constant(pts), ad::constant(pts), kind, cfg).value();
      const Matrix exact = oracle::brute_gram(pts, kind == KernelKind::spherical);
      worst = std::max(worst, (f * f.transpose() - exact).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= tol, "max |Phi Phi^T - K| = " + fmt("%.3e", worst)};
}

// ---------------------------------------------------------------- 5

Outcome sparsemax_check(const json& m) {
  const double tol = m.at("tolerance");
  Rng rng(2024);
  double worst = 0, worst_sum = 0;
  for (int i = 0; i < m.at("vectors").get<int>(); ++i) {
    const int k = 1 + static_cast<int>(rng.below(16));
    const RowVector z = oracle::random_matrix(rng, 1, k, 0.2 + 3 * rng.uniform());
    const RowVector got = sparsemax(z);
    worst = std::max(worst, (got - oracle::michelot_sparsemax(z)).cwiseAbs().maxCoeff());
    worst_sum = std::max(worst_sum, std::abs(got.sum() - 1.0));
    if (got.minCoeff() < 0) worst = 1;
  }
  RowVector ex(3);
  ex << 1.0, 0.5, -1.0;
  const RowVector w = sparsemax(ex);
  const bool example = std::abs(w(0) - 0.75) < 1e-15 && std::abs(w(1) - 0.25) < 1e-15 && w(2) == 0.0;
  return {worst <= tol && worst_sum <= tol && example,
          "max diff " + fmt("%.1e", worst) + ", max |sum-1| " + fmt("%.1e", worst_sum) + ", example " +
              (example ? "exact" : "wrong")};
}

// ---------------------------------------------------------------- 6

// Literal expansion over every (anchor, positive, candidate set) triple.
double brute_node_graph(const std::vector<ProjectedViews>& v, std::size_t i, NegativesMode mode, double tau) {
  std::vector<RowVector> ge, gs;
  for (const auto& x : v) {
    ge.push_back(x.graph_euclidean.value());
    gs.push_back(x.graph_spherical.value());
  }
  const Matrix ze = v[i].node_euclidean.value(), zs = v[i].node_spherical.value();
  double total = 0;
  for (Eigen::Index j = 0; j < ze.rows(); ++j) {
    const auto cs = mode == NegativesMode::batch ? gs : std::vector<RowVector>{gs[i]};
    const auto ce = mode == NegativesMode::batch ? ge : std::vector<RowVector>{ge[i]};
    total += oracle::nt_xent(ze.row(j), gs[i], cs, tau);
    total += oracle::nt_xent(zs.row(j), ge[i], ce, tau);
  }
  return total / static_cast<double>(ze.rows());
}

double brute_graph_graph(const std::vector<ProjectedViews>& v, NegativesMode mode, double tau) {
  std::vector<RowVector> ge, gs;
  for (const auto& x : v) {
    ge.push_back(x.graph_euclidean.value());
    gs.push_back(x.graph_spherical.value());
  }
  double total = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto cs = mode == NegativesMode::batch ? gs : std::vector<RowVector>{gs[i]};
    const auto ce = mode == NegativesMode::batch ? ge : std::vector<RowVector>{ge[i]};
    total += oracle::nt_xent(ge[i], gs[i], cs, tau) + oracle::nt_xent(gs[i], ge[i], ce, tau);
  }
  return total;
}

Outcome loss_brute_force(const json& m) {
  const double tol = m.at("tolerance");
  double worst = 0;
  int cases = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    ModelConfig mc;
    mc.input_dim = 7;
    mc.hidden = 4;
    mc.clusters = 4;
    mc.head_hidden = 5;
    mc.head_out = 3;
    auto params = ModelParams::init(mc, seed);
    const auto ga = oracle::random_graph(rng, "a", 2, 7), gb = oracle::random_graph(rng, "b", 3, 7);
    const std::vector<PreparedGraph> prepared{prepare_graph(ga, mc), prepare_graph(gb, mc)};
    const auto bound = bind_model(params, mc.kernel, true);
    std::vector<ProjectedViews> views;
    for (const auto& pg : prepared) {
      const auto pass = forward_graph(pg, bound, mc.kernel);
      views.push_back(project(pass.views, bound.node_head, bound.graph_head));
    }
    const auto ctx = make_batch_context(views);
    for (double tau : {0.01, 0.5}) {
      for (auto mode : {NegativesMode::batch, NegativesMode::self_only}) {
        LossConfig lc;
        lc.temperature = tau;
        lc.negatives = mode;
        double gg_sum = 0;
        for (std::size_t i = 0; i < views.size(); ++i) {
          worst = std::max(worst, std::abs(node_graph_loss(views[i], i, ctx, lc).scalar() -
                                           brute_node_graph(views, i, mode, tau)));
          gg_sum += graph_graph_loss(views[i], i, ctx, lc).scalar();
        }
        const double brute = brute_graph_graph(views, mode, tau);
        worst = std::max(worst, std::abs(graph_graph_loss(ctx, lc).scalar() - brute));
        worst = std::max(worst, std::abs(gg_sum - brute));
        ++cases;
      }
    }
  }
  return {worst <= tol, std::to_string(cases) + " batches, max |lib - brute| = " + fmt("%.3e", worst)};
}

// ---------------------------------------------------------------- 7

Outcome training_sanity(const json& m) {
  const auto graphs = synthetic_graphs(m.at("cohort_seed"), m.at("cohort_size"));
  const TrainConfig cfg = TrainConfig::from_json(m.at("config"), TrainConfig{});
  const auto a = pretrain(graphs, cfg);
  const auto b = pretrain(graphs, cfg);

  double diff = 0;
  const auto pa = a.params.all();
  const auto pb = b.params.all();
  for (std::size_t i = 0; i < pa.size(); ++i) diff = std::max(diff, (pa[i]->value - pb[i]->value).cwiseAbs().maxCoeff());

  const double first = a.log.epochs.front().total, last = a.log.epochs.back().total;
  const double ratio = last / first;

  const ModelConfig mc = cfg.model_config(graphs.front().feature_dim);
  auto trained = a.params;
  auto random_init = ModelParams::init(mc, cfg.seed);
  CvOptions cv;
  cv.repeats = m.at("cv").at("repeats");
  cv.folds = m.at("cv").at("folds");
  cv.seed = m.at("cv").at("seed");
  const double auc_t = repeated_cv(embed(trained, mc, graphs), EvalTask::classify, cv).summary("auroc")->mean;
  const double auc_r = repeated_cv(embed(random_init, mc, graphs), EvalTask::classify, cv).summary("auroc")->mean;

  const bool ok_a = ratio <= m.at("loss_ratio_max").get<double>();
  const bool ok_b = auc_t - auc_r >= m.at("auroc_margin_min").get<double>();
  const bool ok_c = diff <= m.at("determinism_tolerance").get<double>();
  const std::string detail = std::string("(a) ") + (ok_a ? "ok" : "FAIL") + " loss ratio " + fmt("%.4f", ratio) +
                             "; (b) " + (ok_b ? "ok" : "FAIL") + " AUROC " + fmt("%.4f", auc_t) + " vs random " +
                             fmt("%.4f", auc_r) + " margin " + fmt("%.4f", auc_t - auc_r) + "; (c) " +
                             (ok_c ? "ok" : "FAIL") + " max param diff " + fmt("%.1e", diff);
  return {ok_a && ok_b && ok_c, detail};
}

// ---------------------------------------------------------------- 8

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    // manifests and the training log carry wall-clock times
    if (name.ends_with(".manifest.json") || name.ends_with(".log.csv")) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[name] = std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

Outcome pipeline_repro(const json& m) {
  const fs::path dir = fs::temp_directory_path() / ("gki_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string g = GKI_CLI_PATH;
  const auto p = [&](const std::string& f) { return (dir / f).string(); };
  const std::vector<std::pair<std::string, std::string>> chain{
      {"synth " + m.at("synth").get<std::string>() + " --out " + p("cohort.jsonl"), p("cohort.jsonl")},
      {"build-graphs --in " + p("cohort.jsonl") + " --out " + p("graphs.jsonl"), p("graphs.jsonl")},
      {"pretrain --in " + p("graphs.jsonl") + " --out " + p("model.ckpt") + " " + m.at("pretrain").get<std::string>(),
       p("model.ckpt")},
      {"embed --model " + p("model.ckpt") + " --in " + p("graphs.jsonl") + " --out " + p("emb.jsonl"), p("emb.jsonl")},
      {"eval-classify --in " + p("emb.jsonl") + " --out " + p("classify.json"), p("classify.json")},
      {"eval-similar --in " + p("emb.jsonl") + " --out " + p("similar.json"), p("similar.json")},
  };
  for (const auto& [args, out] : chain) {
    const int code = shell(g + " " + args);
    if (code != 0) {
      fs::remove_all(dir);
      return {false, "'" + args.substr(0, args.find(' ')) + "' exited " + std::to_string(code)};
    }
  }
  const auto first = snapshot(dir);
  for (const auto& [args, out] : chain) {
    const int code = shell(g + " replay --manifest " + out + ".manifest.json");
    if (code != 0) {
      fs::remove_all(dir);
      return {false, "replay of '" + args.substr(0, args.find(' ')) + "' exited " + std::to_string(code)};
    }
  }
  const auto second = snapshot(dir);
  std::vector<std::string> differ;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) differ.push_back(name);
  }
  fs::remove_all(dir);
  std::string detail = std::to_string(chain.size()) + " commands, " + std::to_string(first.size()) +
                       " output files compared after replay";
  for (const auto& d : differ) detail += ", differs: " + d;
  return {differ.empty() && first.size() == second.size(), detail};
}

// ---------------------------------------------------------------- 9

Outcome graph_construction() {
  const std::string line =
      R"({"patient_id":"p1","history":[)"
      R"({"hadm_id":"h1","admittime":"2010-01-01","dischtime":"2010-01-31","deathtime":null,"gender":"F","age":47,)"
      R"("hospital_expire_flag":false,"icd_codes":["D1","D2"],"days":30,"drugs":["R0"]},)"
      R"({"hadm_id":"h2","admittime":"2010-03-02","dischtime":"2010-03-16","deathtime":null,"gender":"F","age":47,)"
      R"("hospital_expire_flag":false,"icd_codes":["D3"],"days":14,"drugs":["R1"]}]})";
  std::istringstream in(line + "\n");
  const auto records = parse_records(in);
  const auto vocab = Vocabulary::from_records(records);
  using Triple = std::tuple<std::string, std::string, double>;
  auto triples = [](const PatientGraph& g) {
    std::multiset<Triple> out;
    for (const auto& e : g.edges) out.insert({g.node_tokens[e.src], g.node_tokens[e.dst], e.weight});
    return out;
  };
  const std::multiset<Triple> expected{{"gender:F", "icd:D1", 47}, {"gender:F", "icd:D2", 47},
                                       {"icd:D1", "drug:R0", 30},  {"icd:D2", "drug:R0", 30},
                                       {"drug:R0", "icd:D3", 30},  {"icd:D3", "drug:R1", 14}};
  const auto full = triples(build_graph(records[0], vocab));
  const auto literal = triples(build_graph(records[0], vocab, BuildOptions{false}));
  std::multiset<Triple> dropped;
  std::set_difference(full.begin(), full.end(), literal.begin(), literal.end(),
                      std::inserter(dropped, dropped.begin()));
  const bool subset = std::includes(full.begin(), full.end(), literal.begin(), literal.end());
  const std::multiset<Triple> first_visit{{"icd:D1", "drug:R0", 30}, {"icd:D2", "drug:R0", 30}};
  const bool ok = full == expected && subset && dropped == first_visit;
  return {ok, std::to_string(full.size()) + " edges reproduced" + (full == expected ? "" : " (MISMATCH)") +
                  ", literal mode drops " + std::to_string(dropped.size()) + " first-visit diagnosis->drug edges"};
}

// ---------------------------------------------------------------- 10

// VmHWM of this process. Unlike ru_maxrss it belongs to the address space,
// so a freshly exec'd child does not inherit the parent's peak.
long self_peak_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("VmHWM:", 0) == 0) return std::stol(line.substr(6));
  return -1;
}

int memory_probe(int batch, const std::string& mode) {
  const auto graphs = synthetic_graphs(1, 200);
  TrainConfig cfg;
  cfg.hidden = cfg.clusters = cfg.head_hidden = cfg.head_out = 32;
  cfg.batch_size = batch;
  cfg.negatives = parse_negatives_mode(mode);
  const ModelConfig mc = cfg.model_config(graphs.front().feature_dim);
  std::vector<PreparedGraph> prepared;
  prepared.reserve(graphs.size());
  for (const auto& g : graphs) prepared.push_back(prepare_graph(g, mc));
  TrainState st;
  st.params = ModelParams::init(mc, cfg.seed);
  st.adam.reset(st.params.all());
  std::vector<const PreparedGraph*> b;
  for (int i = 0; i < batch; ++i) b.push_back(&prepared[static_cast<std::size_t>(i) % prepared.size()]);
  train_step(st, b, cfg);
  std::cout << self_peak_kb() << '\n';
  return 0;
}

// Peak RSS (kB) of a child running one step.
long child_peak_kb(int batch, const std::string& mode) {
  const std::string cmd = fs::read_symlink("/proc/self/exe").string() + " --memory-probe " +
                          std::to_string(batch) + " " + mode;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return -1;
  long kb = -1;
  if (std::fscanf(p, "%ld", &kb) != 1) kb = -1;
  const int status = pclose(p);
  return WIFEXITED(status) && WEXITSTATUS(status) == 0 ? kb : -1;
}

Outcome memory_independence(const json& m) {
  const auto sizes = m.at("batch_sizes").get<std::vector<int>>();
  const double max_var = m.at("max_variation");
  std::vector<long> self_only, batch;
  for (int b : sizes) {
    self_only.push_back(child_peak_kb(b, "self_only"));
    batch.push_back(child_peak_kb(b, "batch"));
  }
  for (long v : self_only)
    if (v <= 0) return {false, "memory probe failed"};
  const auto [lo, hi] = std::minmax_element(self_only.begin(), self_only.end());
  const double variation = static_cast<double>(*hi - *lo) / static_cast<double>(*lo);
  std::string detail = "self_only peak RSS";
  for (std::size_t i = 0; i < sizes.size(); ++i)
    detail += " b" + std::to_string(sizes[i]) + "=" + std::to_string(self_only[i]) + "kB";
  detail += ", variation " + fmt("%.2f%%", 100 * variation) + "; batch mode for contrast";
  for (std::size_t i = 0; i < sizes.size(); ++i)
    detail += " b" + std::to_string(sizes[i]) + "=" + std::to_string(batch[i]) + "kB";
  return {variation <= max_var, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc == 4 && std::string(argv[1]) == "--memory-probe") return memory_probe(std::stoi(argv[2]), argv[3]);

  std::set<int> only;
  if (argc == 3 && std::string(argv[1]) == "--only") {
    std::stringstream ss(argv[2]);
    std::string item;
    while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
  }

  const json manifest = load_manifest();
  struct Criterion {
    int id;
    const char* name;
    const char* section;
    std::function<Outcome(const json&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient contract", "gradient_contract", gradient_contract},
      {2, "chord/arc bound", "chord_bound", chord_bound},
      {3, "kernel PSD", "kernel_psd", kernel_psd},
      {4, "Nystrom exact recovery", "nystrom", nystrom_recovery},
      {5, "sparsemax", "sparsemax", sparsemax_check},
      {6, "losses by brute force", "loss_brute_force", loss_brute_force},
      {7, "training sanity", "training", training_sanity},
      {8, "pipeline reproducibility", "pipeline", pipeline_repro},
      {9, "graph construction", "", [](const json&) { return graph_construction(); }},
      {10, "self_only memory vs batch size", "memory", memory_independence},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const json section = c.section[0] ? manifest.at(c.section) : json::object();
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(section);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (section.contains("runtime_max_seconds") && secs > section.at("runtime_max_seconds").get<double>()) {
      o.pass = false;
      o.detail += "; runtime over budget";
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d: %s  %s: %s [%.1fs]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
