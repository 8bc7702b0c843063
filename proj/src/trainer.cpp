#include "boxrl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "boxrl/numerics.hpp"
#include "boxrl/rewards.hpp"
#include "boxrl/seq.hpp"

namespace boxrl {

namespace {

// Stream tags for seed derivation. Frozen: changing any value changes every
// run keyed by the same master seed and breaks checkpoint-resume determinism.
constexpr std::uint64_t kInitStream = 0xB0;
constexpr std::uint64_t kWarmupStream = 0xB1;
constexpr std::uint64_t kBatchStream = 0xB2;
constexpr std::uint64_t kSampleStream = 0xB3;

PolicyDims dims_for(const RunConfig& cfg, const Vocab& vocab) {
  return PolicyDims{vocab.size(), cfg.window, cfg.d_emb, cfg.d_hid, vocab.pad()};
}

}  // namespace

Trainer::Trainer(RunConfig cfg, Vocab vocab, TaskSplits splits)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), splits_(std::move(splits)) {
  cfg_.validate();
  const PolicyDims dims = dims_for(cfg_, vocab_);
  current_ = PolicyParams::gaussian_init(dims, cfg_.init_std,
                                         derive_seed(cfg_.seed, kInitStream));
  reference_ = PolicySnapshot{current_, SnapshotRole::reference};
  opt_ = AdamState::init(current_);
}

void Trainer::run_warmup() {
  if (warmed_up_) throw std::logic_error("Trainer::run_warmup: already warmed up");
  if (splits_.train.empty())
    throw std::logic_error("Trainer::run_warmup: empty train split");
  const PolicyDims& dims = current_.dims;

  for (int w = 0; w < cfg_.warmup_steps; ++w) {
    Rng rng(derive_seed(cfg_.seed, kWarmupStream, static_cast<std::uint64_t>(w)));
    std::vector<LogProbTerm> terms;
    for (int b = 0; b < cfg_.warmup_batch; ++b) {
      const TaskInstance& inst = splits_.train[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(splits_.train.size()) - 1))];
      for (std::size_t t = 0; t < inst.gold_trace.size(); ++t)
        terms.push_back(LogProbTerm{
            context_window(dims, inst.prompt, inst.gold_trace, static_cast<int>(t)),
            inst.gold_trace[t], 0.0});
    }
    if (terms.empty()) continue;
    // Mean next-token negative log-likelihood over the batch.
    const double coeff = -1.0 / static_cast<double>(terms.size());
    for (LogProbTerm& term : terms) term.coeff = coeff;
    GradientSet grads = backward(current_, terms, {}, nullptr);
    const double lr = cfg_.warmup_learning_rate > 0.0 ? cfg_.warmup_learning_rate
                                                      : cfg_.learning_rate;
    adam_step(current_, grads, opt_, lr, cfg_.adam);
  }

  // The reference policy freezes here; the reinforcement phase starts with a
  // fresh optimizer so warm-up moments never leak into the policy updates.
  reference_ = PolicySnapshot{current_, SnapshotRole::reference};
  opt_ = AdamState::init(current_);
  warmed_up_ = true;
}

Trainer::Group Trainer::rollout_group(const PolicySnapshot& old_policy,
                                      const TaskInstance& inst, std::int64_t step_index,
                                      int prompt_slot, long* scoring_passes) {
  Group group;
  group.instance = &inst;
  group.prompts.plain = inst.prompt;
  group.prompts.truth = inst.truth;
  if (cfg_.reward_mode == RewardMode::generalthinker && cfg_.flags.am) {
    try {
      group.prompts.answer_conditioned = build_answer_conditioned_prompt(
          vocab_, inst.prompt, inst.truth, cfg_.max_length);
    } catch (const SeqOverflowError&) {
      // Left empty: members fall back to unmodulated advantages.
    }
  }

  group.members.resize(static_cast<std::size_t>(cfg_.group_size));
  for (int j = 0; j < cfg_.group_size; ++j) {
    Member& m = group.members[static_cast<std::size_t>(j)];
    const std::uint64_t seed =
        derive_seed(cfg_.seed, kSampleStream, static_cast<std::uint64_t>(step_index),
                    static_cast<std::uint64_t>(prompt_slot), static_cast<std::uint64_t>(j));
    m.response = sample_response(old_policy.params, inst.prompt, cfg_.temperature,
                                 cfg_.max_new_tokens, vocab_.eos(), seed,
                                 &m.old_logprobs);
    m.split = split_response(vocab_, m.response);
    ++*scoring_passes;  // the rollout's own forward pass over the response
  }
  return group;
}

void Trainer::score_group(Group& group, long* scoring_passes) {
  const TaskInstance& inst = *group.instance;
  const bool modulated = cfg_.reward_mode == RewardMode::generalthinker && cfg_.flags.am;

  for (Member& m : group.members) {
    m.binary = binary_reward(m.split, inst.truth);
    if (cfg_.reward_mode == RewardMode::binary) {
      m.reward = m.binary;
      continue;
    }
    // Likelihood of the boxed truth after the sampled reasoning, scored on the
    // pre-update parameters (current == old at this point in the step).
    try {
      m.reward = likelihood_reward(current_, vocab_, group.prompts.plain,
                                   m.split.reasoning, inst.truth, cfg_.max_length);
      ++*scoring_passes;
    } catch (const SeqOverflowError&) {
      m.valid = false;
      m.reward = 0.0;
      continue;
    }
    if (modulated && !group.prompts.answer_conditioned.empty()) {
      const int t_r = static_cast<int>(m.split.reasoning.size());
      if (t_r > 0)
        m.token_signal =
            token_compat(current_, reference_.params, group.prompts.plain,
                         group.prompts.answer_conditioned, m.response, t_r);
      ++*scoring_passes;  // the answer-conditioned pass, one per scored response
    }
  }

  // Group-relative normalization over the members that produced a reward.
  const std::size_t g = group.members.size();
  group.advantage.values.assign(g, 0.0);
  std::vector<double> valid_rewards;
  for (const Member& m : group.members)
    if (m.valid) valid_rewards.push_back(m.reward);
  if (valid_rewards.size() < 2) {
    group.advantage.degenerate = true;
    return;
  }
  RewardVector rv;
  rv.values = valid_rewards;
  rv.mode = cfg_.reward_mode;
  const GroupAdvantage sub = group_normalize(rv);
  group.advantage.degenerate = sub.degenerate;
  std::size_t k = 0;
  for (std::size_t j = 0; j < g; ++j)
    if (group.members[j].valid) group.advantage.values[j] = sub.values[k++];
}

StepRecord Trainer::train_step() {
  if (!warmed_up_)
    throw std::logic_error("Trainer::train_step: run_warmup or restore first");
  if (splits_.train.empty())
    throw std::logic_error("Trainer::train_step: empty train split");
  const auto t0 = std::chrono::steady_clock::now();
  const PolicyDims& dims = current_.dims;

  // One behavior snapshot per step; every sample in the batch comes from it.
  const PolicySnapshot old_policy{current_, SnapshotRole::old};

  Rng batch_rng(derive_seed(cfg_.seed, kBatchStream, static_cast<std::uint64_t>(step_)));
  long scoring_passes = 0;
  std::vector<Group> groups;
  groups.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int p = 0; p < cfg_.batch_size; ++p) {
    const TaskInstance& inst = splits_.train[static_cast<std::size_t>(
        batch_rng.uniform_int(0, static_cast<int>(splits_.train.size()) - 1))];
    Group group = rollout_group(old_policy, inst, step_, p, &scoring_passes);
    score_group(group, &scoring_passes);
    groups.push_back(std::move(group));
  }

  const ModulationFlags effective_flags =
      cfg_.reward_mode == RewardMode::generalthinker ? cfg_.flags : ModulationFlags{};

  diag_ = StepDiagnostics{};
  SurrogateSpec spec;
  spec.num_groups = static_cast<int>(groups.size());
  spec.group_size = cfg_.group_size;
  spec.kl_beta = cfg_.kl_beta;
  spec.clip_eps = cfg_.clip_eps;

  double reward_sum = 0.0;
  long reward_count = 0;
  double binary_sum = 0.0;
  double kl_sum = 0.0;
  double entropy_sum = 0.0;
  long responses = 0;
  long ppo_clipped = 0;
  int response_index = 0;

  for (Group& group : groups) {
    std::vector<TokenSignal> signals;
    std::vector<int> full_lengths;
    for (const Member& m : group.members) {
      signals.push_back(m.token_signal);
      full_lengths.push_back(m.split.full_length);
      if (!m.valid) ++diag_.invalid_members;
      if (m.valid) {
        reward_sum += m.reward;
        ++reward_count;
      }
      binary_sum += m.binary;
    }
    AdvantageMatrix matrix = assemble(group.advantage, signals, full_lengths,
                                      effective_flags, cfg_.lambda_tok, cfg_.eps_tok);
    diag_.adv_telemetry.reasoning_tokens += matrix.telemetry.reasoning_tokens;
    diag_.adv_telemetry.would_clip += matrix.telemetry.would_clip;
    diag_.adv_telemetry.clipped += matrix.telemetry.clipped;
    diag_.adv_telemetry.sign_flips += matrix.telemetry.sign_flips;

    for (std::size_t j = 0; j < group.members.size(); ++j) {
      const Member& m = group.members[j];
      const int t_full = m.split.full_length;
      spec.response_lengths.push_back(t_full);
      for (int t = 0; t < t_full; ++t) {
        SurrogateToken tok;
        tok.window = context_window(dims, group.prompts.plain, m.response, t);
        tok.token = m.response[static_cast<std::size_t>(t)];
        tok.old_logprob = m.old_logprobs[static_cast<std::size_t>(t)];
        tok.advantage = matrix.rows[j][static_cast<std::size_t>(t)];
        const std::vector<double> logdist = next_token_logdist(current_, tok.window);
        const double rho =
            std::exp(logdist[static_cast<std::size_t>(tok.token)] - tok.old_logprob);
        diag_.max_ratio_deviation =
            std::max(diag_.max_ratio_deviation, std::abs(rho - 1.0));
        // Branch frozen at the pre-update parameters; ties keep the ratio term.
        const double clamped = std::clamp(rho, 1.0 - cfg_.clip_eps, 1.0 + cfg_.clip_eps);
        tok.unclipped = rho * tok.advantage <= clamped * tok.advantage;
        if (!tok.unclipped) ++ppo_clipped;
        tok.response = response_index;
        spec.tokens.push_back(std::move(tok));
        ++diag_.positions;
      }
      const std::vector<double> kls =
          per_token_kl(current_, reference_.params, group.prompts.plain, m.response);
      const std::vector<double> ents =
          per_token_entropy(current_, group.prompts.plain, m.response);
      double kl_mean = 0.0, ent_mean = 0.0;
      for (double v : kls) kl_mean += v;
      for (double v : ents) ent_mean += v;
      kl_sum += kl_mean / static_cast<double>(t_full);
      entropy_sum += ent_mean / static_cast<double>(t_full);
      ++responses;
      ++response_index;
    }
    diag_.matrices.push_back(std::move(matrix));
  }

  diag_.loss = surrogate_value(current_, reference_.params, spec);

  std::vector<LogProbTerm> terms;
  std::vector<KlTerm> kl_terms;
  surrogate_backward_terms(current_, spec, terms, kl_terms);
  const GradientSet grads = backward(current_, terms, kl_terms, &reference_.params);
  adam_step(current_, grads, opt_, cfg_.learning_rate, cfg_.adam);
  ++step_;

  StepRecord rec;
  rec.step = step_;
  rec.mean_reward = reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0;
  rec.train_accuracy =
      responses ? binary_sum / static_cast<double>(responses) : 0.0;
  rec.mean_kl = responses ? kl_sum / static_cast<double>(responses) : 0.0;
  rec.mean_entropy = responses ? entropy_sum / static_cast<double>(responses) : 0.0;
  const long reasoning = diag_.adv_telemetry.reasoning_tokens;
  rec.clip_ratio =
      reasoning ? static_cast<double>(diag_.adv_telemetry.would_clip) /
                      static_cast<double>(reasoning)
                : 0.0;
  rec.sign_flip_ratio =
      reasoning ? static_cast<double>(diag_.adv_telemetry.sign_flips) /
                      static_cast<double>(reasoning)
                : 0.0;
  rec.ppo_clip_ratio =
      diag_.positions ? static_cast<double>(ppo_clipped) /
                            static_cast<double>(diag_.positions)
                      : 0.0;
  rec.grad_norm = grads.l2_norm();
  rec.scoring_passes = scoring_passes;
  rec.wall_clock_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

double Trainer::evaluate(const std::vector<TaskInstance>& instances) const {
  if (instances.empty()) return 0.0;
  long correct = 0;
  for (const TaskInstance& inst : instances) {
    const TokenSeq response = sample_response(current_, inst.prompt, 0.0,
                                              cfg_.max_new_tokens, vocab_.eos(), 0);
    const ResponseSplit split = split_response(vocab_, response);
    if (binary_reward(split, inst.truth) == 1.0) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

FamilyAccuracy Trainer::evaluate_families(
    const std::vector<TaskInstance>& instances) const {
  FamilyAccuracy acc;
  long correct = 0, arith_correct = 0, mcq_correct = 0;
  for (const TaskInstance& inst : instances) {
    const TokenSeq response = sample_response(current_, inst.prompt, 0.0,
                                              cfg_.max_new_tokens, vocab_.eos(), 0);
    const ResponseSplit split = split_response(vocab_, response);
    const bool hit = binary_reward(split, inst.truth) == 1.0;
    correct += hit;
    if (inst.family == TaskFamily::arith) {
      ++acc.n_arith;
      arith_correct += hit;
    } else {
      ++acc.n_mcq;
      mcq_correct += hit;
    }
  }
  acc.overall = instances.empty()
                    ? 0.0
                    : static_cast<double>(correct) / static_cast<double>(instances.size());
  acc.arith = acc.n_arith ? static_cast<double>(arith_correct) /
                                static_cast<double>(acc.n_arith)
                          : 0.0;
  acc.mcq =
      acc.n_mcq ? static_cast<double>(mcq_correct) / static_cast<double>(acc.n_mcq) : 0.0;
  return acc;
}

TrainerCheckpoint Trainer::checkpoint() const {
  TrainerCheckpoint ckpt;
  ckpt.current = current_;
  ckpt.reference = reference_.params;
  ckpt.opt = opt_;
  ckpt.step = step_;
  ckpt.seed = cfg_.seed;
  ckpt.warmed_up = warmed_up_;
  return ckpt;
}

void Trainer::restore(const TrainerCheckpoint& ckpt) {
  const PolicyDims expected = dims_for(cfg_, vocab_);
  if (!(ckpt.current.dims == expected) || !(ckpt.reference.dims == expected))
    throw std::invalid_argument(
        "Trainer::restore: checkpoint dimensions do not match the configuration");
  if (ckpt.seed != cfg_.seed)
    throw std::invalid_argument(
        "Trainer::restore: checkpoint seed does not match the configuration");
  current_ = ckpt.current;
  reference_ = PolicySnapshot{ckpt.reference, SnapshotRole::reference};
  opt_ = ckpt.opt;
  step_ = ckpt.step;
  warmed_up_ = ckpt.warmed_up;
  diag_ = StepDiagnostics{};
}

}  // namespace boxrl
