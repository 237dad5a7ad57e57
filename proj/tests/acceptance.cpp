// Acceptance suite: runs each release criterion end to end and prints one
// PASS/FAIL line per criterion. Exit code is the number of failed criteria.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "foresee/foresee.hpp"
#include "oracles.hpp"

using namespace foresee;
namespace fs = std::filesystem;

namespace {

const std::string kCli = FORESEE_CLI_PATH;
std::string g_root;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int run_cli(const std::string& args, bool echo = false) {
  const std::string cmd =
      kCli + " " + args + (echo ? "" : " >/dev/null") + " 2>" + g_root + "/stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Value of `column` in the first CSV row whose first cells match `prefix`.
double csv_lookup(const std::string& csv, const std::string& prefix, int column) {
  std::istringstream lines(csv);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(prefix, 0) != 0) continue;
    std::istringstream cells(line);
    std::string cell;
    for (int i = 0; i <= column; ++i)
      if (!std::getline(cells, cell, ',')) return NAN;
    return std::stod(cell);
  }
  return NAN;
}

struct Criterion {
  int id;
  std::string name;
  std::function<bool(std::string&)> body;
};

Tensor<double> random_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(Shape{n});
  for (auto& v : t.values()) v = rng.next_real(lo, hi);
  return t;
}

// --- criterion 1: gradient correctness ---------------------------------------

bool criterion_gradients(std::string& detail) {
  const double start = now_seconds();
  const double step = 1e-5, tol = 1e-4;
  double worst = 0.0;
  Rng rng(1001);

  auto check = [&](auto f, std::vector<Tensor<double>> inputs) {
    auto report = grad_check<double>(f, std::move(inputs), step, tol);
    worst = std::max(worst, static_cast<double>(report.worst()));
    return report.ok();
  };

  bool ok = true;
  // Every differentiable operation.
  Tensor<double> a = random_vec(12, rng);
  Tensor<double> m1({3, 4}, a.values());
  Tensor<double> m2 = random_vec(8, rng);
  Tensor<double> w42({4, 2}, m2.values());
  ok &= check([](Tape<double>& t, const std::vector<Tensor<double>>& in) {
    return sum(matmul(in[0], in[1], &t), &t);
  }, {m1, w42});
  Tensor<double> x = random_vec(10, rng);
  Tensor<double> y = random_vec(10, rng);
  for (auto f : std::vector<std::function<Tensor<double>(Tape<double>&, const Tensor<double>&,
                                                         const Tensor<double>&)>>{
           [](Tape<double>& t, const Tensor<double>& u, const Tensor<double>& v) {
             return add(u, v, &t);
           },
           [](Tape<double>& t, const Tensor<double>& u, const Tensor<double>& v) {
             return sub(u, v, &t);
           },
           [](Tape<double>& t, const Tensor<double>& u, const Tensor<double>& v) {
             return mul(u, v, &t);
           },
           [](Tape<double>& t, const Tensor<double>& u, const Tensor<double>& v) {
             return add_bias(u, v, &t);
           }})
    ok &= check([f](Tape<double>& t, const std::vector<Tensor<double>>& in) {
      return sum(f(t, in[0], in[1]), &t);
    }, {x, y});
  ok &= check([](Tape<double>& t, const std::vector<Tensor<double>>& in) {
    return mse_loss(in[0], in[1], &t);
  }, {x, y});
  for (auto f : std::vector<std::function<Tensor<double>(Tape<double>&, const Tensor<double>&)>>{
           [](Tape<double>& t, const Tensor<double>& u) { return sigmoid(u, &t); },
           [](Tape<double>& t, const Tensor<double>& u) { return foresee::tanh(u, &t); },
           [](Tape<double>& t, const Tensor<double>& u) { return foresee::exp(u, &t); },
           [](Tape<double>& t, const Tensor<double>& u) { return scale(u, 1.3, &t); },
           [](Tape<double>& t, const Tensor<double>& u) { return add_scalar(u, -0.2, &t); }})
    ok &= check([f](Tape<double>& t, const std::vector<Tensor<double>>& in) {
      return sum(f(t, in[0]), &t);
    }, {x});
  ok &= check([](Tape<double>& t, const std::vector<Tensor<double>>& in) {
    Tensor<double> s = softmax(in[0], &t);
    return sum(mul(s, s, &t), &t);
  }, {random_vec(7, rng)});
  ok &= check([](Tape<double>& t, const std::vector<Tensor<double>>& in) {
    Tensor<double> c = concat({in[0], in[1]}, &t);
    return sum(mul(c, c, &t), &t);
  }, {random_vec(5, rng), random_vec(3, rng)});
  ok &= check([](Tape<double>& t, const std::vector<Tensor<double>>& in) {
    Tensor<double> w = weighted_sum({in[0], in[1]}, in[2], &t);
    return sum(mul(w, w, &t), &t);
  }, {random_vec(6, rng), random_vec(6, rng), random_vec(2, rng)});

  // Full Foresee forward + training loss on the toy configuration.
  ModelConfig cfg;
  cfg.input_dim = 8;
  cfg.hidden_size = 4;
  cfg.num_layers = 2;
  cfg.seq_len = 3;
  for (const auto placement : {AttnPlacement::Output, AttnPlacement::Hidden}) {
    ModelConfig pc = cfg;
    pc.attn_placement = placement;
    ForeseeModel<double> model(pc, 1234);
    std::vector<Tensor<double>> frames;
    for (int t = 0; t < 4; ++t) frames.push_back(random_vec(8, rng, 0.0, 1.0));
    auto loss_fn = [&](Tape<double>& tape, const std::vector<Tensor<double>>&) {
      ForeseeUnroll<double> unroll(model, &tape);
      Tensor<double> total;
      for (int t = 0; t < 3; ++t) {
        unroll.step(frames[t]);
        Tensor<double> loss = mse_loss(unroll.predict(true), frames[t + 1], &tape);
        total = t == 0 ? loss : add(total, loss, &tape);
      }
      return scale(total, 1.0 / 3.0, &tape);
    };
    ok &= check(loss_fn, model.parameters());
  }

  const double elapsed = now_seconds() - start;
  std::ostringstream d;
  d << "worst rel err " << worst << ", " << elapsed << "s";
  detail = d.str();
  return ok && worst < tol && elapsed < 120.0;
}

// --- criterion 2: oracle equivalence ------------------------------------------

bool criterion_oracles(std::string& detail) {
  Rng rng(2002);
  double worst = 0.0;
  auto track = [&](double diff) {
    worst = std::max(worst, diff);
    return diff < 1e-6;
  };
  bool ok = true;

  for (int it = 0; it < 10; ++it) {
    const std::size_t in_w = 2 + rng.next_index(6), hid = 2 + rng.next_index(6);

    GruLayerParams<double> gp(in_w, hid, rng);
    Tensor<double> x = random_vec(in_w, rng), h = random_vec(hid, rng);
    const auto got = gru_cell_step(gp, x, h);
    const auto want =
        oracle::gru_step(oracle::gru_weights_of(gp), oracle::to_vec(x), oracle::to_vec(h));
    for (std::size_t i = 0; i < hid; ++i) ok &= track(std::abs(got[i] - want[i]));

    LstmLayerParams<double> lp(in_w, hid, rng);
    LstmState<double> state{random_vec(hid, rng), random_vec(hid, rng)};
    oracle::LstmWeights lw{oracle::to_mat(lp.W_ii), oracle::to_mat(lp.W_if),
                           oracle::to_mat(lp.W_ig), oracle::to_mat(lp.W_io),
                           oracle::to_mat(lp.W_hi), oracle::to_mat(lp.W_hf),
                           oracle::to_mat(lp.W_hg), oracle::to_mat(lp.W_ho),
                           oracle::to_vec(lp.b_ii), oracle::to_vec(lp.b_if),
                           oracle::to_vec(lp.b_ig), oracle::to_vec(lp.b_io),
                           oracle::to_vec(lp.b_hi), oracle::to_vec(lp.b_hf),
                           oracle::to_vec(lp.b_hg), oracle::to_vec(lp.b_ho)};
    oracle::Vec oh = oracle::to_vec(state.h), oc = oracle::to_vec(state.c);
    oracle::lstm_step(lw, oracle::to_vec(x), oh, oc);
    const auto ls = lstm_cell_step(lp, x, state);
    for (std::size_t i = 0; i < hid; ++i) {
      ok &= track(std::abs(ls.h[i] - oh[i]));
      ok &= track(std::abs(ls.c[i] - oc[i]));
    }

    const std::size_t d = 2 + rng.next_index(6);
    AttentionParams<double> attn(d, rng);
    attn.b[0] = rng.next_real(-0.5, 0.5);
    std::vector<Tensor<double>> outputs;
    std::vector<oracle::Vec> o_vecs;
    for (int t = 0; t < 5; ++t) {
      outputs.push_back(random_vec(d, rng));
      o_vecs.push_back(oracle::to_vec(outputs.back()));
    }
    oracle::Vec w_col(d);
    for (std::size_t i = 0; i < d; ++i) w_col[i] = attn.W[i];
    const auto ctx = attention_context(attn, outputs);
    const auto ctx_want = oracle::attention_weights(o_vecs, w_col, attn.b[0], false);
    for (std::size_t t = 0; t < 5; ++t) ok &= track(std::abs(ctx[t] - ctx_want[t]));

    ModelConfig rc;
    rc.input_dim = 2 + static_cast<int>(rng.next_index(8));
    rc.hidden_size = static_cast<int>(hid);
    rc.num_layers = 1;
    rc.seq_len = 2;
    ForeseeModel<double> rm(rc, rng.next_u64());
    Tensor<double> rh = random_vec(hid, rng);
    const auto frame = reconstruct(rm, rh);
    const auto frame_want = oracle::affine(oracle::to_vec(rh), oracle::to_mat(rm.recon_W()),
                                           oracle::to_vec(rm.recon_b()));
    for (std::size_t i = 0; i < frame.size(); ++i)
      ok &= track(std::abs(frame[i] - frame_want[i]));

    Tensor<double> fa = random_vec(32 * 32 * 3, rng, 0.0, 1.0);
    Tensor<double> fb = random_vec(32 * 32 * 3, rng, 0.0, 1.0);
    ok &= track(std::abs(mse_images(fa, fb) - oracle::mse(oracle::to_vec(fa), oracle::to_vec(fb))));
    ok &= track(std::abs(ssim(fa, fb, ImageDims{32, 32, 3}) -
                         oracle::ssim(oracle::to_vec(fa), oracle::to_vec(fb), 32, 32, 3)));
  }
  std::ostringstream d;
  d << "worst abs diff " << worst << " over 10 instances per op";
  detail = d.str();
  return ok;
}

// --- criterion 3: end-to-end learning signal ----------------------------------

struct EndToEnd {
  std::string dataset = "";
  std::string checkpoint = "";
  double train_seconds = 0.0;
};
EndToEnd g_e2e;

bool criterion_learning(std::string& detail) {
  g_e2e.dataset = g_root + "/dataset";
  const std::string train_out = g_root + "/train";
  // Default synthetic config: 20 videos x 200 frames at 32x32x3.
  if (run_cli("synth --out " + g_e2e.dataset + " --seed 11") != 0) {
    detail = "synth failed";
    return false;
  }
  const double start = now_seconds();
  if (run_cli("train --dataset " + g_e2e.dataset + " --out " + train_out +
              " --seed 11 --epochs 2 --val-windows 40") != 0) {
    detail = "train failed";
    return false;
  }
  g_e2e.train_seconds = now_seconds() - start;
  g_e2e.checkpoint = train_out + "/checkpoint.bin";

  const std::string eval_out = g_root + "/eval";
  if (run_cli("eval --dataset " + g_e2e.dataset + " --out " + eval_out + " --checkpoint " +
              g_e2e.checkpoint + " --horizon 1") != 0) {
    detail = "eval failed";
    return false;
  }
  const std::string csv = read_text(eval_out + "/report.csv");
  const double foresee_mse = csv_lookup(csv, "foresee,1,", 2);
  const double copy_mse = csv_lookup(csv, "copy_last,1,", 2);
  std::ostringstream d;
  d << "foresee h1 mse " << foresee_mse << " vs copy-last " << copy_mse << ", train "
    << g_e2e.train_seconds << "s";
  detail = d.str();
  return std::isfinite(foresee_mse) && std::isfinite(copy_mse) && foresee_mse < copy_mse &&
         g_e2e.train_seconds < 900.0;
}

// --- criterion 4: online improvement ------------------------------------------

bool criterion_online(std::string& detail) {
  if (g_e2e.checkpoint.empty()) {
    detail = "skipped: no trained checkpoint from criterion 3";
    return false;
  }
  const std::string out = g_root + "/online";
  if (run_cli("online --dataset " + g_e2e.dataset + " --out " + out + " --checkpoint " +
              g_e2e.checkpoint + " --horizon 5 --stride 8") != 0) {
    detail = "online run failed";
    return false;
  }
  const std::string csv = read_text(out + "/online.csv");
  const double frozen = csv_lookup(csv, "ALL,1,", 3);
  const double online = csv_lookup(csv, "ALL,1,", 4);

  // Horizon-5 rollout bound check on the adapted path's output range.
  const ForeseeModel<float> model = load_foresee_checkpoint<float>(g_e2e.checkpoint);
  PipelineOptions opts;
  const DatasetSplit<float> data = load_dataset<float>(g_e2e.dataset, opts);
  bool bounded = true;
  const auto& video = data.test.front();
  std::vector<Tensor<float>> window(video.frames.begin(), video.frames.begin() + 10);
  for (const auto& frame : rollout(model, window, 5))
    for (std::size_t i = 0; i < frame.size(); ++i)
      bounded &= frame[i] >= 0.0f && frame[i] <= 1.0f;

  std::ostringstream d;
  d << "online h1 mse " << online << " vs frozen " << frozen << " (allowed +5%), rollout bounded "
    << (bounded ? "yes" : "no");
  detail = d.str();
  return std::isfinite(frozen) && std::isfinite(online) && online <= frozen * 1.05 && bounded;
}

// --- criterion 5: ablation harness --------------------------------------------

bool criterion_sweep(std::string& detail) {
  const double start = now_seconds();
  const std::string dataset = g_root + "/sweep_dataset";
  const std::string cfg_path = g_root + "/sweep_synth.cfg";
  std::ofstream(cfg_path) << "num_videos=8\nframes_per_video=44\nseed=21\n";
  if (run_cli("synth --config " + cfg_path + " --out " + dataset + " --seed 21") != 0) {
    detail = "synth failed";
    return false;
  }
  const std::string out_a = g_root + "/sweep_a", out_b = g_root + "/sweep_b";
  if (run_cli("sweep --dataset " + dataset + " --out " + out_a + " --seed 33 --cell-windows 16") !=
          0 ||
      run_cli("sweep --dataset " + dataset + " --out " + out_b + " --seed 33 --cell-windows 16") !=
          0) {
    detail = "sweep run failed";
    return false;
  }
  const std::string csv_a = read_text(out_a + "/sweep.csv");
  const std::string csv_b = read_text(out_b + "/sweep.csv");

  int rows = 0, finite = 0;
  std::istringstream lines(csv_a);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++rows;
    std::istringstream cells(line);
    std::string cell;
    for (int i = 0; i < 5; ++i) std::getline(cells, cell, ',');
    if (!cell.empty() && std::isfinite(std::stod(cell))) ++finite;
  }
  const double elapsed = now_seconds() - start;
  std::ostringstream d;
  d << rows << " cells, " << finite << " finite, identical across runs "
    << (csv_a == csv_b ? "yes" : "no") << ", " << elapsed << "s";
  detail = d.str();
  return rows == 16 && finite == 16 && csv_a == csv_b && elapsed < 3600.0;
}

// --- criterion 6: determinism & persistence ------------------------------------

bool criterion_determinism(std::string& detail) {
  const std::string dataset = g_root + "/sweep_dataset";  // reuses criterion 5 data
  const std::string out_a = g_root + "/det_a", out_b = g_root + "/det_b";
  const std::string args = " --seed 55 --hidden 16 --seq-len 6 --epochs 1 --max-steps 40";
  if (run_cli("train --dataset " + dataset + " --out " + out_a + args) != 0 ||
      run_cli("train --dataset " + dataset + " --out " + out_b + args) != 0) {
    detail = "train runs failed";
    return false;
  }
  const auto bytes_a = read_binary_file(out_a + "/checkpoint.bin");
  const auto bytes_b = read_binary_file(out_b + "/checkpoint.bin");
  const bool same_seed_identical = bytes_a == bytes_b;

  // Save/load round trip yields bit-identical predictions.
  const ForeseeModel<float> loaded = load_foresee_checkpoint<float>(out_a + "/checkpoint.bin");
  PipelineOptions opts;
  const DatasetSplit<float> data = load_dataset<float>(dataset, opts);
  const auto& video = data.test.front();
  std::vector<Tensor<float>> window(video.frames.begin(), video.frames.begin() + 6);
  const std::string resaved = g_root + "/resaved.bin";
  save_checkpoint(loaded, resaved);
  const ForeseeModel<float> reloaded = load_foresee_checkpoint<float>(resaved);
  const bool roundtrip_identical =
      predict_next_frame(loaded, window).values() ==
          predict_next_frame(reloaded, window).values() &&
      read_binary_file(resaved) == bytes_a;

  // CRC validation rejects corruption.
  auto corrupt = bytes_a;
  corrupt[corrupt.size() / 3] ^= 0x01;
  const std::string corrupt_path = g_root + "/corrupt.bin";
  write_binary_file(corrupt_path, corrupt);
  bool rejected = false;
  try {
    load_foresee_checkpoint<float>(corrupt_path);
  } catch (const FormatError&) {
    rejected = true;
  }

  std::ostringstream d;
  d << "same-seed identical " << (same_seed_identical ? "yes" : "no") << ", round trip "
    << (roundtrip_identical ? "yes" : "no") << ", corrupt rejected " << (rejected ? "yes" : "no");
  detail = d.str();
  return same_seed_identical && roundtrip_identical && rejected;
}

// --- criterion 7: invariant property suites ------------------------------------

bool criterion_invariants(std::string& detail) {
  Rng rng(7007);
  bool ok = true;
  int cases = 0;

  // Gate ranges.
  for (int it = 0; it < 100; ++it, ++cases) {
    const std::size_t in_w = 1 + rng.next_index(6), hid = 1 + rng.next_index(6);
    GruLayerParams<double> p(in_w, hid, rng);
    for (auto* t : {&p.W_ir, &p.W_iz, &p.W_in, &p.W_hr, &p.W_hz, &p.W_hn, &p.b_ir, &p.b_iz,
                    &p.b_in, &p.b_hr, &p.b_hz, &p.b_hn})
      for (auto& v : t->values()) v = rng.next_real(-3.0, 3.0);
    Tensor<double> h(Shape{hid});
    for (int t = 0; t < 5; ++t) {
      h = gru_cell_step(p, random_vec(in_w, rng), h);
      for (std::size_t j = 0; j < hid; ++j) ok &= std::abs(h[j]) < 1.0;
    }
  }

  // Attention simplex + T=1 identity.
  for (int it = 0; it < 100; ++it, ++cases) {
    const std::size_t d = 1 + rng.next_index(8);
    const std::size_t steps = 1 + rng.next_index(8);
    AttentionParams<double> attn(d, rng);
    std::vector<Tensor<double>> outputs;
    for (std::size_t t = 0; t < steps; ++t) outputs.push_back(random_vec(d, rng));
    const auto c = attention_context(attn, outputs);
    double total = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      ok &= c[t] > 0.0;
      total += c[t];
    }
    ok &= std::abs(total - 1.0) <= 1e-6;
    const auto attended = attended_output(outputs, c);
    if (steps == 1)
      for (std::size_t i = 0; i < d; ++i) ok &= attended[i] == outputs[0][i];
  }

  // Window-count formula.
  for (int it = 0; it < 100; ++it, ++cases) {
    const int seq = 1 + static_cast<int>(rng.next_index(14));
    const int hor = 1 + static_cast<int>(rng.next_index(7));
    const int len = seq + hor + static_cast<int>(rng.next_index(40));
    FrameSequence<double> v;
    v.source_id = "w";
    for (int i = 0; i < len; ++i) v.frames.push_back(Tensor<double>(Shape{2}));
    ok &= window_sequences(v, seq, hor).size() ==
          static_cast<std::size_t>(len - seq - hor + 1);
  }

  // Softmax shift invariance.
  for (int it = 0; it < 100; ++it, ++cases) {
    const std::size_t n = 1 + rng.next_index(12);
    Tensor<double> x = random_vec(n, rng, -40.0, 40.0);
    Tensor<double> shifted = x.clone();
    const double c = rng.next_real(-80.0, 80.0);
    for (auto& v : shifted.values()) v += c;
    const auto sa = softmax(x), sb = softmax(shifted);
    for (std::size_t i = 0; i < n; ++i) ok &= std::abs(sa[i] - sb[i]) < 1e-9;
  }

  // SSIM identity and symmetry.
  const ImageDims dims{32, 32, 3};
  for (int it = 0; it < 100; ++it, ++cases) {
    Tensor<double> a = random_vec(32 * 32 * 3, rng, 0.0, 1.0);
    Tensor<double> b = random_vec(32 * 32 * 3, rng, 0.0, 1.0);
    ok &= std::abs(100.0 * ssim(a, a, dims) - 100.0) < 1e-9;
    ok &= ssim(a, b, dims) == ssim(b, a, dims);
  }

  std::ostringstream d;
  d << cases << " random cases across 5 property suites";
  detail = d.str();
  return ok;
}

}  // namespace

int main() {
  g_root = (fs::temp_directory_path() / "foresee_acceptance").string();
  fs::remove_all(g_root);
  fs::create_directories(g_root);

  std::vector<Criterion> criteria = {
      {1, "gradient correctness (finite differences, toy Foresee)", criterion_gradients},
      {2, "oracle equivalence (gru/lstm/attention/reconstruct/mse/ssim)", criterion_oracles},
      {3, "end-to-end learning signal (beats copy-last at horizon 1)", criterion_learning},
      {4, "online improvement (adapted <= frozen + 5%, bounded rollout)", criterion_online},
      {5, "ablation harness (16-cell sweep, finite, deterministic)", criterion_sweep},
      {6, "determinism & persistence (seeds, round trip, CRC)", criterion_determinism},
      {7, "invariant property suites (>=100 cases each)", criterion_invariants},
  };

  int failures = 0;
  for (auto& c : criteria) {
    std::string detail;
    bool ok = false;
    const double start = now_seconds();
    try {
      ok = c.body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed = now_seconds() - start;
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.name << " | "
              << detail << " (" << static_cast<long>(elapsed) << "s)" << std::endl;
    if (!ok) ++failures;
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failures))
            << std::endl;
  return failures;
}
