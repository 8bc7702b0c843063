#include "boxrl/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "boxrl/numerics.hpp"

namespace boxrl {

namespace {

void check_dims(const PolicyDims& d) {
  if (d.vocab_size < 2 || d.window < 1 || d.d_emb < 1 || d.d_hid < 1)
    throw std::invalid_argument("policy: dims must be positive (vocab >= 2)");
  if (d.pad_id < 0 || d.pad_id >= d.vocab_size)
    throw std::invalid_argument("policy: pad_id out of range");
}

void check_shapes(const PolicyParams& p) {
  const auto& d = p.dims;
  check_dims(d);
  const bool ok =
      p.embed.size() == static_cast<std::size_t>(d.vocab_size) * d.d_emb &&
      p.w_hid.size() == static_cast<std::size_t>(d.input_dim()) * d.d_hid &&
      p.b_hid.size() == static_cast<std::size_t>(d.d_hid) &&
      p.w_out.size() == static_cast<std::size_t>(d.d_hid) * d.vocab_size;
  if (!ok) throw std::invalid_argument("policy: parameter shapes do not match dims");
}

void check_window_tokens(const PolicyDims& d, const TokenSeq& window) {
  if (static_cast<int>(window.size()) != d.window)
    throw std::invalid_argument("policy: window length must equal dims.window");
  for (TokenId t : window)
    if (t < 0 || t >= d.vocab_size)
      throw std::invalid_argument("policy: window token out of range");
}

// Forward scratch for one position; reused across calls to avoid churn.
struct Workspace {
  std::vector<double> xin, h, logits;

  void resize(const PolicyDims& d) {
    xin.resize(static_cast<std::size_t>(d.input_dim()));
    h.resize(static_cast<std::size_t>(d.d_hid));
    logits.resize(static_cast<std::size_t>(d.vocab_size));
  }
};

// Embeds the window, applies the hidden layer and output projection.
// Leaves pre-softmax logits in ws.logits and activations in ws.h / ws.xin.
void forward_window(const PolicyParams& p, const TokenSeq& window, Workspace& ws) {
  const auto& d = p.dims;
  ws.resize(d);
  for (int k = 0; k < d.window; ++k) {
    const double* src = &p.embed[static_cast<std::size_t>(window[k]) * d.d_emb];
    double* dst = &ws.xin[static_cast<std::size_t>(k) * d.d_emb];
    for (int e = 0; e < d.d_emb; ++e) dst[e] = src[e];
  }
  const int in = d.input_dim();
  for (int j = 0; j < d.d_hid; ++j) {
    double acc = p.b_hid[static_cast<std::size_t>(j)];
    for (int i = 0; i < in; ++i)
      acc += ws.xin[static_cast<std::size_t>(i)] *
             p.w_hid[static_cast<std::size_t>(i) * d.d_hid + j];
    ws.h[static_cast<std::size_t>(j)] = std::tanh(acc);
  }
  for (int v = 0; v < d.vocab_size; ++v) {
    double acc = 0.0;
    for (int j = 0; j < d.d_hid; ++j)
      acc += ws.h[static_cast<std::size_t>(j)] *
             p.w_out[static_cast<std::size_t>(j) * d.vocab_size + v];
    ws.logits[static_cast<std::size_t>(v)] = acc;
  }
}

TokenSeq window_of_context(const PolicyDims& d, const TokenSeq& context) {
  TokenSeq window(static_cast<std::size_t>(d.window), d.pad_id);
  const int n = static_cast<int>(context.size());
  for (int k = 0; k < d.window; ++k) {
    const int pos = n - d.window + k;
    if (pos >= 0) window[static_cast<std::size_t>(k)] = context[static_cast<std::size_t>(pos)];
  }
  return window;
}

// Backpropagates dL/dlogits for the already-forwarded window into grads.
void backprop_window(const PolicyParams& p, const TokenSeq& window, const Workspace& ws,
                     const std::vector<double>& g_logits, GradientSet& grads) {
  const auto& d = p.dims;
  const int in = d.input_dim();

  std::vector<double> g_h(static_cast<std::size_t>(d.d_hid), 0.0);
  for (int j = 0; j < d.d_hid; ++j) {
    const double hj = ws.h[static_cast<std::size_t>(j)];
    double acc = 0.0;
    for (int v = 0; v < d.vocab_size; ++v) {
      const double gv = g_logits[static_cast<std::size_t>(v)];
      grads.w_out[static_cast<std::size_t>(j) * d.vocab_size + v] += hj * gv;
      acc += p.w_out[static_cast<std::size_t>(j) * d.vocab_size + v] * gv;
    }
    g_h[static_cast<std::size_t>(j)] = acc;
  }
  std::vector<double> g_pre(static_cast<std::size_t>(d.d_hid));
  for (int j = 0; j < d.d_hid; ++j) {
    const double hj = ws.h[static_cast<std::size_t>(j)];
    g_pre[static_cast<std::size_t>(j)] = g_h[static_cast<std::size_t>(j)] * (1.0 - hj * hj);
    grads.b_hid[static_cast<std::size_t>(j)] += g_pre[static_cast<std::size_t>(j)];
  }
  std::vector<double> g_xin(static_cast<std::size_t>(in), 0.0);
  for (int i = 0; i < in; ++i) {
    const double xi = ws.xin[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (int j = 0; j < d.d_hid; ++j) {
      const double gp = g_pre[static_cast<std::size_t>(j)];
      grads.w_hid[static_cast<std::size_t>(i) * d.d_hid + j] += xi * gp;
      acc += p.w_hid[static_cast<std::size_t>(i) * d.d_hid + j] * gp;
    }
    g_xin[static_cast<std::size_t>(i)] = acc;
  }
  for (int k = 0; k < d.window; ++k) {
    double* dst = &grads.embed[static_cast<std::size_t>(window[k]) * d.d_emb];
    const double* src = &g_xin[static_cast<std::size_t>(k) * d.d_emb];
    for (int e = 0; e < d.d_emb; ++e) dst[e] += src[e];
  }
}

bool finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

PolicyParams PolicyParams::zeros(const PolicyDims& dims) {
  check_dims(dims);
  PolicyParams p;
  p.dims = dims;
  p.embed.assign(static_cast<std::size_t>(dims.vocab_size) * dims.d_emb, 0.0);
  p.w_hid.assign(static_cast<std::size_t>(dims.input_dim()) * dims.d_hid, 0.0);
  p.b_hid.assign(static_cast<std::size_t>(dims.d_hid), 0.0);
  p.w_out.assign(static_cast<std::size_t>(dims.d_hid) * dims.vocab_size, 0.0);
  return p;
}

PolicyParams PolicyParams::gaussian_init(const PolicyDims& dims, double stddev,
                                         std::uint64_t seed) {
  PolicyParams p = zeros(dims);
  Rng rng(seed);
  for (auto* arr : {&p.embed, &p.w_hid, &p.b_hid, &p.w_out})
    for (double& x : *arr) x = stddev * rng.gaussian();
  return p;
}

std::size_t PolicyParams::count() const {
  return embed.size() + w_hid.size() + b_hid.size() + w_out.size();
}

bool PolicyParams::all_finite() const {
  return finite(embed) && finite(w_hid) && finite(b_hid) && finite(w_out);
}

GradientSet GradientSet::zeros_like(const PolicyParams& params) {
  GradientSet g;
  g.dims = params.dims;
  g.embed.assign(params.embed.size(), 0.0);
  g.w_hid.assign(params.w_hid.size(), 0.0);
  g.b_hid.assign(params.b_hid.size(), 0.0);
  g.w_out.assign(params.w_out.size(), 0.0);
  return g;
}

double GradientSet::l2_norm() const {
  double acc = 0.0;
  for (const auto* arr : {&embed, &w_hid, &b_hid, &w_out})
    for (double x : *arr) acc += x * x;
  return std::sqrt(acc);
}

bool GradientSet::all_finite() const {
  return finite(embed) && finite(w_hid) && finite(b_hid) && finite(w_out);
}

std::vector<double> next_token_logdist(const PolicyParams& p, const TokenSeq& context) {
  check_shapes(p);
  Workspace ws;
  forward_window(p, window_of_context(p.dims, context), ws);
  log_softmax_inplace(ws.logits);
  return ws.logits;
}

std::vector<double> next_token_dist(const PolicyParams& p, const TokenSeq& context) {
  std::vector<double> out = next_token_logdist(p, context);
  for (double& v : out) v = std::exp(v);
  return out;
}

TokenSeq context_window(const PolicyDims& dims, const TokenSeq& prefix,
                        const TokenSeq& continuation, int t) {
  if (t < 0 || t > static_cast<int>(continuation.size()))
    throw std::invalid_argument("context_window: position out of range");
  TokenSeq window(static_cast<std::size_t>(dims.window), dims.pad_id);
  const int total = static_cast<int>(prefix.size()) + t;
  for (int k = 0; k < dims.window; ++k) {
    const int pos = total - dims.window + k;
    if (pos < 0) continue;
    window[static_cast<std::size_t>(k)] =
        pos < static_cast<int>(prefix.size())
            ? prefix[static_cast<std::size_t>(pos)]
            : continuation[static_cast<std::size_t>(pos - prefix.size())];
  }
  return window;
}

TokenSeq sample_response(const PolicyParams& p, const TokenSeq& prompt,
                         double temperature, int max_new_tokens, TokenId eos_id,
                         std::uint64_t seed, std::vector<double>* sampled_logprobs) {
  check_shapes(p);
  if (temperature < 0.0)
    throw std::invalid_argument("sample_response: temperature must be >= 0");
  if (max_new_tokens < 1)
    throw std::invalid_argument("sample_response: max_new_tokens must be >= 1");
  if (eos_id < 0 || eos_id >= p.dims.vocab_size)
    throw std::invalid_argument("sample_response: eos_id out of range");

  Rng rng(seed);
  Workspace ws;
  TokenSeq response;
  if (sampled_logprobs) sampled_logprobs->clear();

  TokenSeq context = prompt;
  for (int step = 0; step < max_new_tokens; ++step) {
    forward_window(p, window_of_context(p.dims, context), ws);
    std::vector<double> logdist = ws.logits;
    log_softmax_inplace(logdist);

    TokenId pick = 0;
    if (temperature == 0.0) {
      for (int v = 1; v < p.dims.vocab_size; ++v)
        if (logdist[static_cast<std::size_t>(v)] > logdist[static_cast<std::size_t>(pick)])
          pick = v;
    } else {
      std::vector<double> tempered = ws.logits;
      for (double& v : tempered) v /= temperature;
      log_softmax_inplace(tempered);
      const double u = rng.uniform();
      double cum = 0.0;
      pick = static_cast<TokenId>(p.dims.vocab_size - 1);
      for (int v = 0; v < p.dims.vocab_size; ++v) {
        cum += std::exp(tempered[static_cast<std::size_t>(v)]);
        if (u < cum) {
          pick = static_cast<TokenId>(v);
          break;
        }
      }
    }
    response.push_back(pick);
    if (sampled_logprobs)
      sampled_logprobs->push_back(logdist[static_cast<std::size_t>(pick)]);
    context.push_back(pick);
    if (pick == eos_id) break;
  }
  return response;
}

std::vector<double> token_logprobs(const PolicyParams& p, const TokenSeq& prefix,
                                   const TokenSeq& continuation) {
  check_shapes(p);
  Workspace ws;
  std::vector<double> out;
  out.reserve(continuation.size());
  for (int t = 0; t < static_cast<int>(continuation.size()); ++t) {
    forward_window(p, context_window(p.dims, prefix, continuation, t), ws);
    log_softmax_inplace(ws.logits);
    out.push_back(ws.logits[static_cast<std::size_t>(continuation[static_cast<std::size_t>(t)])]);
  }
  return out;
}

std::vector<double> per_token_kl(const PolicyParams& p, const PolicyParams& q,
                                 const TokenSeq& prefix, const TokenSeq& continuation) {
  check_shapes(p);
  check_shapes(q);
  if (p.dims.vocab_size != q.dims.vocab_size)
    throw std::invalid_argument("per_token_kl: vocabulary sizes differ");
  std::vector<double> out;
  out.reserve(continuation.size());
  for (int t = 0; t < static_cast<int>(continuation.size()); ++t) {
    // Windows may differ if the two policies use different window sizes.
    const auto lp = next_token_logdist(p, context_window(p.dims, prefix, continuation, t));
    const auto lq = next_token_logdist(q, context_window(q.dims, prefix, continuation, t));
    out.push_back(kl_from_logdists(lp, lq));
  }
  return out;
}

std::vector<double> per_token_entropy(const PolicyParams& p, const TokenSeq& prefix,
                                      const TokenSeq& continuation) {
  check_shapes(p);
  std::vector<double> out;
  out.reserve(continuation.size());
  for (int t = 0; t < static_cast<int>(continuation.size()); ++t) {
    const auto lp = next_token_logdist(p, context_window(p.dims, prefix, continuation, t));
    out.push_back(entropy_from_logdist(lp));
  }
  return out;
}

GradientSet backward(const PolicyParams& p, const std::vector<LogProbTerm>& terms,
                     const std::vector<KlTerm>& kl_terms,
                     const PolicyParams* reference) {
  check_shapes(p);
  if (!kl_terms.empty()) {
    if (reference == nullptr)
      throw std::invalid_argument("backward: KL terms require a reference policy");
    check_shapes(*reference);
    if (reference->dims.vocab_size != p.dims.vocab_size)
      throw std::invalid_argument("backward: reference vocabulary size differs");
  }

  GradientSet grads = GradientSet::zeros_like(p);
  Workspace ws;
  std::vector<double> g_logits(static_cast<std::size_t>(p.dims.vocab_size));
  const int V = p.dims.vocab_size;

  for (std::size_t ti = 0; ti < terms.size(); ++ti) {
    const LogProbTerm& term = terms[ti];
    check_window_tokens(p.dims, term.window);
    if (term.target < 0 || term.target >= V)
      throw std::invalid_argument("backward: target token out of range");
    if (term.coeff == 0.0) continue;

    forward_window(p, term.window, ws);
    std::vector<double> logdist = ws.logits;
    log_softmax_inplace(logdist);
    // d(c * log p_y)/dlogit_i = c * ([i == y] - p_i)
    for (int v = 0; v < V; ++v)
      g_logits[static_cast<std::size_t>(v)] =
          term.coeff * ((v == term.target ? 1.0 : 0.0) -
                        std::exp(logdist[static_cast<std::size_t>(v)]));
    if (!finite(g_logits))
      throw std::runtime_error("backward: non-finite gradient at log-prob term " +
                               std::to_string(ti));
    backprop_window(p, term.window, ws, g_logits, grads);
  }

  for (std::size_t ki = 0; ki < kl_terms.size(); ++ki) {
    const KlTerm& term = kl_terms[ki];
    check_window_tokens(p.dims, term.window);
    if (term.coeff == 0.0) continue;

    forward_window(p, term.window, ws);
    std::vector<double> logdist = ws.logits;
    log_softmax_inplace(logdist);
    const auto ref_logdist = next_token_logdist(*reference, term.window);
    const double kl = kl_from_logdists(logdist, ref_logdist);
    // d(c * KL)/dlogit_i = c * p_i * (log p_i - log q_i - KL)
    for (int v = 0; v < V; ++v) {
      const double lp = logdist[static_cast<std::size_t>(v)];
      g_logits[static_cast<std::size_t>(v)] =
          term.coeff * std::exp(lp) * (lp - ref_logdist[static_cast<std::size_t>(v)] - kl);
    }
    if (!finite(g_logits))
      throw std::runtime_error("backward: non-finite gradient at KL term " +
                               std::to_string(ki));
    backprop_window(p, term.window, ws, g_logits, grads);
  }

  if (!grads.all_finite())
    throw std::runtime_error("backward: accumulated gradient is non-finite");
  return grads;
}

AdamState AdamState::init(const PolicyParams& params) {
  AdamState s;
  s.m = GradientSet::zeros_like(params);
  s.v = GradientSet::zeros_like(params);
  s.t = 0;
  return s;
}

void adam_step(PolicyParams& params, const GradientSet& grads, AdamState& state,
               double lr, const AdamConfig& cfg) {
  check_shapes(params);
  if (!(params.dims == grads.dims) || !(params.dims == state.m.dims))
    throw std::invalid_argument("adam_step: dims mismatch");
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw std::invalid_argument("adam_step: lr must be positive and finite");
  if (!grads.all_finite()) throw std::invalid_argument("adam_step: non-finite gradient");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

  auto update = [&](std::vector<double>& w, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * w[i]);
    }
  };
  update(params.embed, grads.embed, state.m.embed, state.v.embed);
  update(params.w_hid, grads.w_hid, state.m.w_hid, state.v.w_hid);
  update(params.b_hid, grads.b_hid, state.m.b_hid, state.v.b_hid);
  update(params.w_out, grads.w_out, state.m.w_out, state.v.w_out);

  if (!params.all_finite())
    throw std::runtime_error("adam_step: parameters became non-finite");
}

}  // namespace boxrl
