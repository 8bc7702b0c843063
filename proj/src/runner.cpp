#include "boxrl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "boxrl/checkpoint.hpp"
#include "boxrl/metrics.hpp"
#include "boxrl/numerics.hpp"
#include "boxrl/objective.hpp"
#include "boxrl/reference.hpp"
#include "boxrl/seq.hpp"

namespace boxrl {

namespace {

Vocab load_vocab(const RunConfig& cfg) {
  return cfg.vocab_file.empty() ? Vocab::standard() : Vocab::load(cfg.vocab_file);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string flags_tag(const ModulationFlags& flags) {
  std::string tag;
  if (flags.am) tag += "am";
  if (flags.tc) tag += tag.empty() ? "tc" : "-tc";
  if (flags.dp) tag += tag.empty() ? "dp" : "-dp";
  return tag.empty() ? "plain" : tag;
}

double population_variance(const std::vector<StepRecord>& records,
                           double StepRecord::* field) {
  if (records.empty()) return 0.0;
  double mean = 0.0;
  for (const StepRecord& r : records) mean += r.*field;
  mean /= static_cast<double>(records.size());
  double var = 0.0;
  for (const StepRecord& r : records) {
    const double d = r.*field - mean;
    var += d * d;
  }
  return var / static_cast<double>(records.size());
}

double mean_of(const std::vector<StepRecord>& records, double StepRecord::* field) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const StepRecord& r : records) sum += r.*field;
  return sum / static_cast<double>(records.size());
}

}  // namespace

std::string default_out_dir(const RunConfig& cfg) {
  const char* env = std::getenv("BOXRL_OUT_ROOT");
  const std::string root = env && *env ? env : "runs";
  std::ostringstream name;
  name << root << '/' << reward_mode_name(cfg.reward_mode) << '_'
       << flags_tag(cfg.flags) << "_seed" << cfg.seed;
  return name.str();
}

RunResult run_train(const RunConfig& cfg_in,
                    const std::optional<std::string>& resume_from, bool quiet) {
  RunConfig cfg = cfg_in;
  cfg.validate();
  if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  const Vocab vocab = load_vocab(cfg);
  TaskSplits splits = make_splits(vocab, cfg.seed, cfg.splits, cfg.tasks);

  RunResult res;
  res.out_dir = cfg.out_dir;
  res.metrics_path = cfg.out_dir + "/metrics.jsonl";
  res.checkpoint_path = cfg.out_dir + "/final.ckpt";

  vocab.save(cfg.out_dir + "/vocab.txt");
  cfg.save(cfg.out_dir + "/config.json");

  MetricLog log(res.metrics_path);
  // The header carries the experiment definition; the output path is where
  // the log itself lives, so it is normalized out to keep logs from identical
  // experiments byte-identical regardless of where they are written.
  RunConfig header_cfg = cfg;
  header_cfg.out_dir.clear();
  log.write_header(header_cfg);

  Trainer trainer(cfg, vocab, std::move(splits));
  if (resume_from) {
    trainer.restore(load_checkpoint(*resume_from));
    if (!trainer.warmed_up()) trainer.run_warmup();
  } else {
    trainer.run_warmup();
  }

  res.base = trainer.evaluate_families(trainer.splits().heldout);
  log.write_eval(trainer.step(), "base", res.base);
  if (!quiet)
    std::cout << "step " << trainer.step() << "  held-out accuracy "
              << res.base.overall << " (post warm-up)\n";

  while (trainer.step() < cfg.total_steps) {
    const StepRecord rec = trainer.train_step();
    res.records.push_back(rec);
    res.total_scoring_passes += rec.scoring_passes;
    log.write_step(rec);

    if (cfg.eval_interval > 0 && rec.step % cfg.eval_interval == 0 &&
        rec.step < cfg.total_steps)
      log.write_eval(rec.step, "validation",
                     trainer.evaluate_families(trainer.splits().validation));
    if (cfg.checkpoint_interval > 0 && rec.step % cfg.checkpoint_interval == 0 &&
        rec.step < cfg.total_steps)
      save_checkpoint(trainer.checkpoint(),
                      cfg.out_dir + "/step-" + std::to_string(rec.step) + ".ckpt");
    if (!quiet && (rec.step % 50 == 0 || rec.step == cfg.total_steps))
      std::cout << "step " << rec.step << "  reward " << rec.mean_reward
                << "  train acc " << rec.train_accuracy << "  KL " << rec.mean_kl
                << "\n";
  }

  res.final = trainer.evaluate_families(trainer.splits().heldout);
  log.write_eval(trainer.step(), "final", res.final);
  save_checkpoint(trainer.checkpoint(), res.checkpoint_path);

  res.kl_variance = population_variance(res.records, &StepRecord::mean_kl);
  res.entropy_variance = population_variance(res.records, &StepRecord::mean_entropy);
  res.mean_clip_ratio = mean_of(res.records, &StepRecord::clip_ratio);
  res.mean_sign_flip_ratio = mean_of(res.records, &StepRecord::sign_flip_ratio);

  nlohmann::json summary;
  summary["steps"] = trainer.step();
  summary["base_overall"] = res.base.overall;
  summary["final_overall"] = res.final.overall;
  summary["final_arith"] = res.final.arith;
  summary["final_mcq"] = res.final.mcq;
  summary["kl_variance"] = res.kl_variance;
  summary["entropy_variance"] = res.entropy_variance;
  summary["mean_clip_ratio"] = res.mean_clip_ratio;
  summary["mean_sign_flip_ratio"] = res.mean_sign_flip_ratio;
  summary["total_scoring_passes"] = res.total_scoring_passes;
  log.write_summary(summary);

  if (!quiet) {
    std::printf("held-out accuracy: %.4f -> %.4f\n", res.base.overall,
                res.final.overall);
    std::printf(
        "token clip ratio: mean %.4f over steps (nominal operating range: below "
        "5%%)\n",
        res.mean_clip_ratio);
    std::printf(
        "sign-flip ratio: mean %.4f over steps (nominal operating range: "
        "approximately 1%%)\n",
        res.mean_sign_flip_ratio);
    std::printf("scoring passes: %ld total\n", res.total_scoring_passes);
  }
  return res;
}

std::vector<AblationRow> ablation_rows(double lambda_tok) {
  return {
      {"likelihood", RewardMode::likelihood, ModulationFlags{false, false, false}, 0.0},
      {"am", RewardMode::generalthinker, ModulationFlags{true, false, false}, lambda_tok},
      {"am-tc", RewardMode::generalthinker, ModulationFlags{true, true, false}, lambda_tok},
      {"am-dp", RewardMode::generalthinker, ModulationFlags{true, false, true}, lambda_tok},
      {"am-tc-dp", RewardMode::generalthinker, ModulationFlags{true, true, true},
       lambda_tok},
  };
}

int run_ablation(const AblationOptions& opts) {
  std::string out_root = opts.out_root;
  if (out_root.empty()) {
    const char* env = std::getenv("BOXRL_OUT_ROOT");
    out_root = std::string(env && *env ? env : "runs") + "/ablation";
  }
  std::filesystem::create_directories(out_root);

  std::vector<AblationRow> rows = ablation_rows(opts.base.lambda_tok);
  if (opts.lambda_grid) {
    for (double lam : {0.05, 0.1, 0.2, 0.4}) {
      std::ostringstream name;
      name << "am-tc-dp@" << lam;
      rows.push_back(
          {name.str(), RewardMode::generalthinker, ModulationFlags{true, true, true}, lam});
    }
  }

  std::ofstream table(out_root + "/comparison.tsv", std::ios::trunc);
  if (!table)
    throw std::runtime_error("run_ablation: cannot write to '" + out_root + "'");
  table << "name\tmode\tam\ttc\tdp\tlambda_tok\tseed\tbase_acc\tfinal_acc\t"
           "final_arith\tfinal_mcq\tkl_variance\tentropy_variance\t"
           "mean_clip_ratio\tmean_sign_flip_ratio\tstatus\n";

  int failures = 0;
  for (const AblationRow& row : rows) {
    for (std::uint64_t seed : opts.seeds) {
      RunConfig cfg = opts.base;
      cfg.reward_mode = row.mode;
      cfg.flags = row.flags;
      cfg.lambda_tok = row.lambda_tok;
      cfg.seed = seed;
      std::ostringstream dir;
      dir << out_root << '/' << row.name << "_seed" << seed;
      cfg.out_dir = dir.str();

      table << row.name << '\t' << reward_mode_name(row.mode) << '\t' << row.flags.am
            << '\t' << row.flags.tc << '\t' << row.flags.dp << '\t'
            << fmt(row.lambda_tok) << '\t' << seed << '\t';
      try {
        const RunResult r = run_train(cfg, {}, /*quiet=*/true);
        table << fmt(r.base.overall) << '\t' << fmt(r.final.overall) << '\t'
              << fmt(r.final.arith) << '\t' << fmt(r.final.mcq) << '\t'
              << fmt(r.kl_variance) << '\t' << fmt(r.entropy_variance) << '\t'
              << fmt(r.mean_clip_ratio) << '\t' << fmt(r.mean_sign_flip_ratio)
              << "\tok\n";
      } catch (const std::exception& e) {
        ++failures;
        std::string what = e.what();
        std::replace(what.begin(), what.end(), '\t', ' ');
        std::replace(what.begin(), what.end(), '\n', ' ');
        table << "-\t-\t-\t-\t-\t-\t-\t-\tfailed: " << what << '\n';
      }
      table.flush();
    }
  }
  return failures;
}

namespace {

// Per-array worst relative error, merged into the running map.
void merge_worst(std::map<std::string, double>& worst, const GradientSet& a,
                 const GradientSet& b, double floor) {
  auto scan = [&](const char* name, const std::vector<double>& x,
                  const std::vector<double>& y) {
    double w = worst.count(name) ? worst.at(name) : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double denom = std::max({std::abs(x[i]), std::abs(y[i]), floor});
      w = std::max(w, std::abs(x[i] - y[i]) / denom);
    }
    worst[name] = w;
  };
  scan("embed", a.embed, b.embed);
  scan("w_hid", a.w_hid, b.w_hid);
  scan("b_hid", a.b_hid, b.b_hid);
  scan("w_out", a.w_out, b.w_out);
}

TokenSeq random_window(Rng& rng, int window, int vocab_size) {
  TokenSeq w(static_cast<std::size_t>(window));
  for (TokenId& t : w) t = static_cast<TokenId>(rng.uniform_int(0, vocab_size - 1));
  return w;
}

}  // namespace

GradcheckReport run_gradcheck(bool corrupt) {
  GradcheckReport report;
  constexpr double kDelta = 1e-5;
  constexpr double kFloor = 1e-5;
  constexpr double kTol = 1e-4;
  const PolicyDims dims{8, 3, 2, 3, 0};
  Rng rng(1234);

  // 1. Random weighted log-probability objectives.
  for (int k = 0; k < 100; ++k) {
    const PolicyParams params =
        PolicyParams::gaussian_init(dims, 0.3, derive_seed(1234, 1, static_cast<std::uint64_t>(k)));
    std::vector<LogProbTerm> terms;
    const int n_terms = rng.uniform_int(1, 4);
    for (int i = 0; i < n_terms; ++i)
      terms.push_back(LogProbTerm{random_window(rng, dims.window, dims.vocab_size),
                                  static_cast<TokenId>(rng.uniform_int(0, dims.vocab_size - 1)),
                                  rng.uniform() * 4.0 - 2.0});
    const GradientSet analytic = backward(params, terms, {}, nullptr);
    const GradientSet fd = reference::finite_difference(
        params,
        [&](const PolicyParams& p) {
          double v = 0.0;
          for (const LogProbTerm& t : terms)
            v += t.coeff *
                 next_token_logdist(p, t.window)[static_cast<std::size_t>(t.target)];
          return v;
        },
        kDelta);
    report.max_rel_err_logprob = std::max(
        report.max_rel_err_logprob, reference::max_rel_error(analytic, fd, kFloor));
    merge_worst(report.worst_by_array, analytic, fd, kFloor);
  }

  // 2. Weighted KL-to-reference objectives.
  for (int k = 0; k < 20; ++k) {
    const PolicyParams params =
        PolicyParams::gaussian_init(dims, 0.3, derive_seed(1234, 2, static_cast<std::uint64_t>(k)));
    const PolicyParams ref =
        PolicyParams::gaussian_init(dims, 0.3, derive_seed(1234, 3, static_cast<std::uint64_t>(k)));
    std::vector<KlTerm> kl_terms;
    const int n_terms = rng.uniform_int(1, 3);
    for (int i = 0; i < n_terms; ++i)
      kl_terms.push_back(
          KlTerm{random_window(rng, dims.window, dims.vocab_size), rng.uniform() + 0.1});
    const GradientSet analytic = backward(params, {}, kl_terms, &ref);
    const GradientSet fd = reference::finite_difference(
        params,
        [&](const PolicyParams& p) {
          double v = 0.0;
          for (const KlTerm& t : kl_terms)
            v += t.coeff * kl_from_logdists(next_token_logdist(p, t.window),
                                            next_token_logdist(ref, t.window));
          return v;
        },
        kDelta);
    report.max_rel_err_kl =
        std::max(report.max_rel_err_kl, reference::max_rel_error(analytic, fd, kFloor));
    merge_worst(report.worst_by_array, analytic, fd, kFloor);
  }

  // 3. The full frozen-batch surrogate on a miniature instance: two groups of
  //    two responses, lengths <= 4, behavior log-probabilities from a separate
  //    policy so both clip branches appear.
  for (int k = 0; k < 10; ++k) {
    const PolicyParams params =
        PolicyParams::gaussian_init(dims, 0.3, derive_seed(1234, 4, static_cast<std::uint64_t>(k)));
    const PolicyParams ref =
        PolicyParams::gaussian_init(dims, 0.3, derive_seed(1234, 5, static_cast<std::uint64_t>(k)));
    const PolicyParams behavior =
        PolicyParams::gaussian_init(dims, 0.3, derive_seed(1234, 6, static_cast<std::uint64_t>(k)));

    SurrogateSpec spec;
    spec.num_groups = 2;
    spec.group_size = 2;
    spec.kl_beta = 0.05;
    spec.clip_eps = 0.2;
    int response_index = 0;
    for (int g = 0; g < spec.num_groups; ++g) {
      for (int j = 0; j < spec.group_size; ++j) {
        const int t_len = rng.uniform_int(1, 4);
        spec.response_lengths.push_back(t_len);
        TokenSeq prompt = random_window(rng, 2, dims.vocab_size);
        TokenSeq response;
        for (int t = 0; t < t_len; ++t)
          response.push_back(static_cast<TokenId>(rng.uniform_int(0, dims.vocab_size - 1)));
        const std::vector<double> old_lp = token_logprobs(behavior, prompt, response);
        const double adv = rng.uniform() * 4.0 - 2.0;
        for (int t = 0; t < t_len; ++t) {
          SurrogateToken tok;
          tok.window = context_window(dims, prompt, response, t);
          tok.token = response[static_cast<std::size_t>(t)];
          tok.old_logprob = old_lp[static_cast<std::size_t>(t)];
          tok.advantage = adv;
          const double lp =
              next_token_logdist(params, tok.window)[static_cast<std::size_t>(tok.token)];
          const double rho = std::exp(lp - tok.old_logprob);
          const double clamped = std::clamp(rho, 1.0 - spec.clip_eps, 1.0 + spec.clip_eps);
          tok.unclipped = rho * adv <= clamped * adv;
          tok.response = response_index;
          spec.tokens.push_back(std::move(tok));
        }
        ++response_index;
      }
    }

    std::vector<LogProbTerm> terms;
    std::vector<KlTerm> kl_terms;
    surrogate_backward_terms(params, spec, terms, kl_terms);
    GradientSet analytic = backward(params, terms, kl_terms, &ref);
    if (corrupt && k == 0 && !analytic.w_hid.empty()) analytic.w_hid[0] += 1e-2;
    const GradientSet fd = reference::finite_difference(
        params, [&](const PolicyParams& p) { return surrogate_value(p, ref, spec); },
        kDelta);
    report.max_rel_err_step =
        std::max(report.max_rel_err_step, reference::max_rel_error(analytic, fd, kFloor));
    merge_worst(report.worst_by_array, analytic, fd, kFloor);
  }

  // 4. Advantage pipeline vs. the straight-line oracle.
  for (int k = 0; k < 2000; ++k) {
    const int g = rng.uniform_int(2, 8);
    std::vector<double> rewards;
    const bool constant = rng.uniform() < 0.1;
    const double base = rng.uniform() * 4.0 - 2.0;
    for (int j = 0; j < g; ++j)
      rewards.push_back(constant ? base : rng.uniform() * 4.0 - 2.0);

    RewardVector rv;
    rv.values = rewards;
    rv.mode = RewardMode::likelihood;
    const GroupAdvantage adv = group_normalize(rv);
    const reference::GroupResult oracle = reference::group_advantages(rewards);
    for (int j = 0; j < g; ++j)
      report.max_advantage_dev =
          std::max(report.max_advantage_dev,
                   std::abs(adv.values[static_cast<std::size_t>(j)] -
                            oracle.advantages[static_cast<std::size_t>(j)]));

    ModulationFlags flags;
    flags.am = rng.uniform() < 0.8;
    flags.tc = flags.am && rng.uniform() < 0.5;
    flags.dp = flags.am && rng.uniform() < 0.5;
    const double lambda = rng.uniform() * 0.99;
    const double eps = 0.5 + rng.uniform() * 2.0;
    std::vector<TokenSignal> signals(static_cast<std::size_t>(g));
    std::vector<int> lengths(static_cast<std::size_t>(g));
    for (int j = 0; j < g; ++j) {
      const int t_r = rng.uniform_int(0, 6);
      const int t_full = t_r + rng.uniform_int(0, 3);
      lengths[static_cast<std::size_t>(j)] = std::max(1, t_full);
      for (int t = 0; t < t_r; ++t)
        signals[static_cast<std::size_t>(j)].push_back(rng.uniform() * 10.0 - 5.0);
    }
    const AdvantageMatrix matrix =
        assemble(adv, signals, lengths, flags, lambda, eps);
    for (int j = 0; j < g; ++j) {
      const std::vector<double> oracle_row = reference::modulated_row(
          oracle.advantages[static_cast<std::size_t>(j)],
          signals[static_cast<std::size_t>(j)], lengths[static_cast<std::size_t>(j)],
          flags.am, flags.tc, flags.dp, lambda, eps, oracle.degenerate);
      for (std::size_t t = 0; t < oracle_row.size(); ++t)
        report.max_advantage_dev =
            std::max(report.max_advantage_dev,
                     std::abs(matrix.rows[static_cast<std::size_t>(j)][t] - oracle_row[t]));
    }
  }

  report.pass = report.max_rel_err_logprob < kTol && report.max_rel_err_kl < kTol &&
                report.max_rel_err_step < kTol && report.max_advantage_dev < 1e-9;
  std::ostringstream detail;
  detail << "logprob " << report.max_rel_err_logprob << ", kl " << report.max_rel_err_kl
         << ", step " << report.max_rel_err_step << ", advantage "
         << report.max_advantage_dev;
  report.detail = detail.str();
  return report;
}

void print_gradcheck_report(const GradcheckReport& report) {
  std::printf("gradcheck: logprob objectives   max rel err %.3e\n",
              report.max_rel_err_logprob);
  std::printf("gradcheck: kl objectives        max rel err %.3e\n",
              report.max_rel_err_kl);
  std::printf("gradcheck: step objective       max rel err %.3e\n",
              report.max_rel_err_step);
  std::printf("gradcheck: advantage pipeline   max abs dev %.3e\n",
              report.max_advantage_dev);
  for (const auto& [name, err] : report.worst_by_array)
    std::printf("gradcheck: worst for %-6s      rel err %.3e\n", name.c_str(), err);
  std::printf("gradcheck: %s\n", report.pass ? "PASS" : "FAIL");
}

void run_export_tasks(const RunConfig& cfg_in, const std::string& out_dir) {
  RunConfig cfg = cfg_in;
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const Vocab vocab = load_vocab(cfg);
  const TaskSplits splits = make_splits(vocab, cfg.seed, cfg.splits, cfg.tasks);
  vocab.save(out_dir + "/vocab.txt");
  export_instances(splits.train, out_dir + "/train.tsv");
  export_instances(splits.validation, out_dir + "/validation.tsv");
  export_instances(splits.heldout, out_dir + "/heldout.tsv");
}

}  // namespace boxrl
