#include "boxrl/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace boxrl {

const char* task_family_name(TaskFamily family) {
  switch (family) {
    case TaskFamily::arith: return "arith";
    case TaskFamily::mcq: return "mcq";
  }
  throw std::logic_error("task_family_name: unknown family");
}

TaskTokens TaskTokens::resolve(const Vocab& vocab) {
  TaskTokens t;
  for (int d = 0; d < 10; ++d) t.digit[d] = vocab.id_of(std::string(1, char('0' + d)));
  for (int l = 0; l < 4; ++l) t.letter[l] = vocab.id_of(std::string(1, char('A' + l)));
  t.plus = vocab.id_of("+");
  t.minus = vocab.id_of("-");
  t.times = vocab.id_of("*");
  t.mod = vocab.id_of("%");
  t.lparen = vocab.id_of("(");
  t.rparen = vocab.id_of(")");
  t.ask = vocab.id_of("?");
  t.eq = vocab.id_of("=");
  t.q_max = vocab.id_of("max");
  t.q_min = vocab.id_of("min");
  t.q_even = vocab.id_of("even");
  t.q_odd = vocab.id_of("odd");
  return t;
}

int arith_step(int lhs, char op, int rhs, int modulus) {
  if (modulus < 2) throw std::invalid_argument("arith_step: modulus must be >= 2");
  long v = 0;
  switch (op) {
    case '+': v = static_cast<long>(lhs) + rhs; break;
    case '-': v = static_cast<long>(lhs) - rhs; break;
    case '*': v = static_cast<long>(lhs) * rhs; break;
    default: throw std::invalid_argument("arith_step: unknown operator");
  }
  long r = v % modulus;
  if (r < 0) r += modulus;
  return static_cast<int>(r);
}

int arith_chain(const std::vector<int>& operands, const std::vector<char>& ops,
                int modulus) {
  if (operands.size() != ops.size() + 1 || operands.empty())
    throw std::invalid_argument("arith_chain: need one more operand than ops");
  int acc = operands[0];
  for (std::size_t i = 0; i < ops.size(); ++i)
    acc = arith_step(acc, ops[i], operands[i + 1], modulus);
  return acc;
}

namespace {

constexpr char kOps[3] = {'+', '-', '*'};

TokenId op_token(const TaskTokens& t, char op) {
  switch (op) {
    case '+': return t.plus;
    case '-': return t.minus;
    case '*': return t.times;
  }
  throw std::logic_error("op_token: unknown operator");
}

}  // namespace

TaskInstance gen_arith(const Vocab& vocab, Rng& rng, int difficulty) {
  if (difficulty < 1 || difficulty > 3)
    throw std::invalid_argument("gen_arith: difficulty must be in {1,2,3}");
  const TaskTokens tok = TaskTokens::resolve(vocab);

  const int n_ops = difficulty;  // infix ops; the trailing reduction adds one more
  std::vector<int> operands;
  std::vector<char> ops;
  for (int i = 0; i <= n_ops; ++i) operands.push_back(rng.uniform_int(0, 9));
  for (int i = 0; i < n_ops; ++i) ops.push_back(kOps[rng.uniform_int(0, 2)]);
  const int modulus = rng.uniform_int(5, 9);

  TaskInstance inst;
  inst.family = TaskFamily::arith;
  inst.difficulty = difficulty;

  // (( a0 op1 a1 ) op2 a2 ...) % m ?
  inst.prompt.push_back(vocab.bos());
  for (int i = 0; i < n_ops; ++i) inst.prompt.push_back(tok.lparen);
  inst.prompt.push_back(tok.digit[operands[0]]);
  for (int i = 0; i < n_ops; ++i) {
    inst.prompt.push_back(op_token(tok, ops[static_cast<std::size_t>(i)]));
    inst.prompt.push_back(tok.digit[operands[static_cast<std::size_t>(i) + 1]]);
    inst.prompt.push_back(tok.rparen);
  }
  inst.prompt.push_back(tok.mod);
  inst.prompt.push_back(tok.digit[modulus]);
  inst.prompt.push_back(tok.ask);

  // Trace restates each step: lhs op rhs = value, reduced after every op.
  int acc = operands[0];
  for (int i = 0; i < n_ops; ++i) {
    const int lhs = acc;
    const char op = ops[static_cast<std::size_t>(i)];
    const int rhs = operands[static_cast<std::size_t>(i) + 1];
    acc = arith_step(lhs, op, rhs, modulus);
    inst.gold_trace.push_back(tok.digit[lhs]);
    inst.gold_trace.push_back(op_token(tok, op));
    inst.gold_trace.push_back(tok.digit[rhs]);
    inst.gold_trace.push_back(tok.eq);
    inst.gold_trace.push_back(tok.digit[acc]);
  }
  inst.truth = {tok.digit[acc]};
  inst.gold_trace.push_back(vocab.box_open());
  inst.gold_trace.push_back(tok.digit[acc]);
  inst.gold_trace.push_back(vocab.box_close());
  inst.gold_trace.push_back(vocab.eos());
  return inst;
}

TaskInstance gen_mcq(const Vocab& vocab, Rng& rng, int difficulty) {
  if (difficulty < 1 || difficulty > 3)
    throw std::invalid_argument("gen_mcq: difficulty must be in {1,2,3}");
  const TaskTokens tok = TaskTokens::resolve(vocab);

  const int qtype = rng.uniform_int(0, 3);  // max, min, even, odd
  std::array<int, 4> values{};
  int correct = 0;

  if (qtype <= 1) {
    // Four distinct digits; the extreme one is the answer.
    std::array<int, 10> pool{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    for (int i = 0; i < 4; ++i) {
      const int j = rng.uniform_int(i, 9);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
      values[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
    correct = 0;
    for (int i = 1; i < 4; ++i) {
      const bool better = qtype == 0
                              ? values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(correct)]
                              : values[static_cast<std::size_t>(i)] < values[static_cast<std::size_t>(correct)];
      if (better) correct = i;
    }
  } else {
    // Exactly one option has the asked parity; distractors are distinct.
    const bool want_even = qtype == 2;
    std::array<int, 5> match_pool = want_even ? std::array<int, 5>{0, 2, 4, 6, 8}
                                              : std::array<int, 5>{1, 3, 5, 7, 9};
    std::array<int, 5> other_pool = want_even ? std::array<int, 5>{1, 3, 5, 7, 9}
                                              : std::array<int, 5>{0, 2, 4, 6, 8};
    const int target = match_pool[static_cast<std::size_t>(rng.uniform_int(0, 4))];
    for (int i = 0; i < 3; ++i) {
      const int j = rng.uniform_int(i, 4);
      std::swap(other_pool[static_cast<std::size_t>(i)], other_pool[static_cast<std::size_t>(j)]);
    }
    correct = rng.uniform_int(0, 3);
    int d = 0;
    for (int i = 0; i < 4; ++i)
      values[static_cast<std::size_t>(i)] =
          i == correct ? target : other_pool[static_cast<std::size_t>(d++)];
  }

  const TokenId qword[4] = {tok.q_max, tok.q_min, tok.q_even, tok.q_odd};

  TaskInstance inst;
  inst.family = TaskFamily::mcq;
  inst.difficulty = difficulty;
  inst.prompt.push_back(vocab.bos());
  inst.prompt.push_back(qword[qtype]);
  for (int i = 0; i < 4; ++i)
    inst.prompt.push_back(tok.digit[values[static_cast<std::size_t>(i)]]);
  inst.prompt.push_back(tok.ask);

  inst.truth = {tok.letter[correct]};
  inst.gold_trace = {tok.digit[values[static_cast<std::size_t>(correct)]], tok.eq,
                     tok.letter[correct], vocab.box_open(), tok.letter[correct],
                     vocab.box_close(), vocab.eos()};
  return inst;
}

TaskSplits make_splits(const Vocab& vocab, std::uint64_t seed,
                       const SplitCounts& counts, const TaskMix& mix) {
  if (counts.train < 0 || counts.validation < 0 || counts.heldout < 0)
    throw std::invalid_argument("make_splits: negative split size");
  if (!(mix.arith_fraction >= 0.0 && mix.arith_fraction <= 1.0))
    throw std::invalid_argument("make_splits: arith_fraction must be in [0, 1]");
  if (mix.min_difficulty < 1 || mix.max_difficulty > 3 ||
      mix.min_difficulty > mix.max_difficulty)
    throw std::invalid_argument("make_splits: difficulty range must be within {1..3}");

  const long total =
      static_cast<long>(counts.train) + counts.validation + counts.heldout;
  TaskSplits splits;
  Rng rng(seed);
  std::set<TokenSeq> seen;  // disjointness is keyed on the prompt
  long produced = 0;
  long attempts = 0;
  const long max_attempts = 1000 * std::max(total, 1L);

  while (produced < total) {
    if (++attempts > max_attempts)
      throw std::runtime_error(
          "make_splits: instance space too small for the requested disjoint splits");
    const bool arith = rng.uniform() < mix.arith_fraction;
    const int difficulty = rng.uniform_int(mix.min_difficulty, mix.max_difficulty);
    TaskInstance inst =
        arith ? gen_arith(vocab, rng, difficulty) : gen_mcq(vocab, rng, difficulty);
    if (!seen.insert(inst.prompt).second) continue;

    if (produced < counts.train)
      splits.train.push_back(std::move(inst));
    else if (produced < counts.train + counts.validation)
      splits.validation.push_back(std::move(inst));
    else
      splits.heldout.push_back(std::move(inst));
    ++produced;
  }
  return splits;
}

namespace {

std::string ids_to_field(const TokenSeq& seq) {
  std::ostringstream out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out << ' ';
    out << seq[i];
  }
  return out.str();
}

TokenSeq field_to_ids(const std::string& field) {
  TokenSeq out;
  std::istringstream in(field);
  long v = 0;
  while (in >> v) out.push_back(static_cast<TokenId>(v));
  return out;
}

}  // namespace

void export_instances(const std::vector<TaskInstance>& instances,
                      const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("export_instances: cannot open '" + path + "'");
  for (const TaskInstance& inst : instances)
    out << task_family_name(inst.family) << '\t' << inst.difficulty << '\t'
        << ids_to_field(inst.prompt) << '\t' << ids_to_field(inst.truth) << '\n';
  if (!out) throw std::runtime_error("export_instances: write failed for '" + path + "'");
}

std::vector<TaskInstance> import_instances(const Vocab& vocab, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_instances: cannot open '" + path + "'");
  std::vector<TaskInstance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string family, difficulty, prompt, truth;
    if (!std::getline(ls, family, '\t') || !std::getline(ls, difficulty, '\t') ||
        !std::getline(ls, prompt, '\t') || !std::getline(ls, truth))
      throw std::runtime_error("import_instances: malformed line '" + line + "'");
    TaskInstance inst;
    if (family == "arith") inst.family = TaskFamily::arith;
    else if (family == "mcq") inst.family = TaskFamily::mcq;
    else throw std::runtime_error("import_instances: unknown family '" + family + "'");
    inst.difficulty = std::stoi(difficulty);
    inst.prompt = field_to_ids(prompt);
    inst.truth = field_to_ids(truth);
    vocab.check_seq(inst.prompt);
    vocab.check_seq(inst.truth);
    out.push_back(std::move(inst));  // gold_trace is not part of the format
  }
  return out;
}

}  // namespace boxrl
