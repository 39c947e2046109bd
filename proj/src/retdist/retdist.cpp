#include "bop/retdist/retdist.hpp"

#include <cmath>
#include <stdexcept>

namespace bop::retdist {

namespace diff = bop::diff;

namespace {

diff::Tensor column_tensor(std::span<const double> v) {
  return diff::Tensor::from_vector({v.size(), 1}, std::vector<double>(v.begin(), v.end()));
}

diff::Tensor matrix_tensor(const std::vector<std::vector<double>>& rows) {
  const std::size_t m = rows.size();
  const std::size_t n = rows.empty() ? 0 : rows[0].size();
  std::vector<double> flat;
  flat.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw std::invalid_argument("matrix_tensor: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return diff::Tensor::from_vector({m, n}, std::move(flat));
}

diff::Tensor gaussian_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> eps(rows * cols);
  for (auto& e : eps) e = rng.normal();
  return diff::Tensor::from_vector({rows, cols}, std::move(eps));
}

diff::Tensor reparam(const GaussianParams& p, const diff::Tensor& eps) {
  return diff::add(p.mu, diff::mul(p.sigma, eps));
}

diff::Tensor log_sigmoid(const diff::Tensor& logit) {
  return diff::neg(diff::softplus_t(diff::neg(logit)));
}

diff::Tensor log_one_minus_sigmoid(const diff::Tensor& logit) {
  return diff::neg(diff::softplus_t(logit));
}

}  // namespace

GaussianParams SharedVae::split_gaussian(const diff::Tensor& raw, int latent_dim) {
  const std::size_t L = static_cast<std::size_t>(latent_dim);
  GaussianParams p;
  p.mu = diff::slice_cols(raw, 0, L);
  p.sigma = diff::clamp_t(diff::exp_t(diff::slice_cols(raw, L, 2 * L)), kSigmaLo, kSigmaHi);
  return p;
}

SharedVae SharedVae::make(int obs_dim, int latent_dim, std::size_t hidden_width,
                          diff::Activation act, Rng& rng) {
  SharedVae v;
  v.obs_dim_ = obs_dim;
  v.latent_dim_ = latent_dim;
  const auto ds = static_cast<std::size_t>(obs_dim);
  const auto L = static_cast<std::size_t>(latent_dim);
  v.prior_ = diff::Mlp::make({ds, hidden_width, hidden_width, 2 * L}, act, rng);
  v.encoder_ = diff::Mlp::make({1 + ds, hidden_width, hidden_width, 2 * L}, act, rng);
  v.discriminator_ = diff::Mlp::make({1 + L + ds, hidden_width, hidden_width, 1}, act, rng);
  return v;
}

GaussianParams SharedVae::prior_params(const diff::Tensor& states) const {
  return split_gaussian(prior_.forward(states), latent_dim_);
}

GaussianParams SharedVae::encode_params(const diff::Tensor& x, const diff::Tensor& states) const {
  return split_gaussian(encoder_.forward(diff::concat_cols({x, states})), latent_dim_);
}

diff::Tensor SharedVae::disc_logit(const diff::Tensor& x, const diff::Tensor& z,
                                   const diff::Tensor& states) const {
  auto logit = discriminator_.forward(diff::concat_cols({x, z, states}));
  return diff::sum_rows(diff::clamp_t(logit, -kDiscLogitClamp, kDiscLogitClamp));
}

std::pair<std::vector<double>, std::vector<double>> SharedVae::encode(
    double x, std::span<const double> state) const {
  diff::NoGradGuard ng;
  std::vector<double> input;
  input.reserve(1 + state.size());
  input.push_back(x);
  input.insert(input.end(), state.begin(), state.end());
  auto raw = encoder_.eval(input);
  const std::size_t L = static_cast<std::size_t>(latent_dim_);
  std::vector<double> mu(raw.begin(), raw.begin() + L);
  std::vector<double> sigma(L);
  for (std::size_t i = 0; i < L; ++i)
    sigma[i] = std::clamp(std::exp(raw[L + i]), kSigmaLo, kSigmaHi);
  return {std::move(mu), std::move(sigma)};
}

std::vector<double> SharedVae::sample_prior(std::span<const double> state, Rng& rng) const {
  diff::NoGradGuard ng;
  auto raw = prior_.eval(state);
  const std::size_t L = static_cast<std::size_t>(latent_dim_);
  std::vector<double> z(L);
  for (std::size_t i = 0; i < L; ++i) {
    const double sigma = std::clamp(std::exp(raw[L + i]), kSigmaLo, kSigmaHi);
    z[i] = raw[i] + sigma * rng.normal();
  }
  return z;
}

double SharedVae::disc_prob(double x, std::span<const double> z,
                            std::span<const double> state) const {
  diff::NoGradGuard ng;
  std::vector<double> input;
  input.reserve(1 + z.size() + state.size());
  input.push_back(x);
  input.insert(input.end(), z.begin(), z.end());
  input.insert(input.end(), state.begin(), state.end());
  const double logit =
      std::clamp(discriminator_.eval(input)[0], -kDiscLogitClamp, kDiscLogitClamp);
  return 1.0 / (1.0 + std::exp(-logit));
}

Head Head::make(int index, int obs_dim, int latent_dim, const envs::ActionSpace& action_space,
                std::size_t hidden_width, diff::Activation act, std::uint64_t seed) {
  Head h;
  h.index_ = index;
  Rng rng(seed);
  const auto ds = static_cast<std::size_t>(obs_dim);
  const auto L = static_cast<std::size_t>(latent_dim);
  h.generator_ = diff::Mlp::make({L + ds, hidden_width, hidden_width, 1}, act, rng);
  Rng scratch(seed ^ 0xa5a5a5a5ull);
  h.target_generator_ = diff::Mlp::make({L + ds, hidden_width, hidden_width, 1}, act, scratch);
  h.target_generator_.copy_parameters_from(h.generator_);
  h.target_generator_.set_requires_grad(false);
  h.policy_ = ensemble::PolicyHead::make(obs_dim, action_space, hidden_width, act, rng);
  return h;
}

diff::Tensor Head::generator_out(const diff::Tensor& z, const diff::Tensor& states) const {
  return diff::sum_rows(generator_.forward(diff::concat_cols({z, states})));
}

diff::Tensor Head::target_out(const diff::Tensor& z, const diff::Tensor& states) const {
  return diff::sum_rows(target_generator_.forward(diff::concat_cols({z, states})));
}

double Head::generator_value(std::span<const double> z, std::span<const double> state) const {
  std::vector<double> input;
  input.reserve(z.size() + state.size());
  input.insert(input.end(), z.begin(), z.end());
  input.insert(input.end(), state.begin(), state.end());
  return generator_.eval(input)[0];
}

double Head::target_value(std::span<const double> z, std::span<const double> state) const {
  std::vector<double> input;
  input.reserve(z.size() + state.size());
  input.insert(input.end(), z.begin(), z.end());
  input.insert(input.end(), state.begin(), state.end());
  return target_generator_.eval(input)[0];
}

void Head::sync_target() { target_generator_.copy_parameters_from(generator_); }

void sync_targets(std::vector<Head>& heads) {
  for (auto& h : heads) h.sync_target();
}

ReturnSample sample_return(const Head& head, const SharedVae& shared,
                           std::span<const double> state, Rng& rng) {
  ReturnSample s;
  s.head_index = head.index();
  s.latent = shared.sample_prior(state, rng);
  s.value = head.generator_value(s.latent, state);
  return s;
}

std::vector<ReturnSample> sample_returns(const std::vector<Head>& heads, const SharedVae& shared,
                                         std::span<const double> state, Rng& rng) {
  const auto z = shared.sample_prior(state, rng);
  std::vector<ReturnSample> out;
  out.reserve(heads.size());
  for (const auto& h : heads) {
    ReturnSample s;
    s.head_index = h.index();
    s.latent = z;
    s.value = h.generator_value(z, state);
    out.push_back(std::move(s));
  }
  return out;
}

VaeForward prepare_update_batch(const SharedVae& shared, const std::vector<Head>& heads,
                                const UpdateBatch& batch, Rng& rng, OpSplit* split) {
  const std::size_t K = heads.size();
  const std::size_t B = batch.states.size();
  if (batch.head_targets.size() != K)
    throw std::invalid_argument("prepare_update_batch: head target table must have K rows");
  if (batch.data_x.size() != B)
    throw std::invalid_argument("prepare_update_batch: data_x length mismatch");
  const std::size_t L = static_cast<std::size_t>(shared.latent_dim());

  VaeForward fwd;
  fwd.states = matrix_tensor(batch.states);
  fwd.data_x = column_tensor(batch.data_x);

  // Encodings ztilde^i ~ q(.|x^i, s), one reparameterized draw per (t, i).
  auto mark = diff::mac_count();
  fwd.ztilde.reserve(K);
  fwd.head_x.reserve(K);
  diff::Tensor zsum;
  for (std::size_t i = 0; i < K; ++i) {
    if (batch.head_targets[i].size() != B)
      throw std::invalid_argument("prepare_update_batch: head target length mismatch");
    fwd.head_x.push_back(column_tensor(batch.head_targets[i]));
    auto q = shared.encode_params(fwd.head_x.back(), fwd.states);
    auto zt = reparam(q, gaussian_noise(B, L, rng));
    zsum = (i == 0) ? zt : diff::add(zsum, zt);
    fwd.ztilde.push_back(std::move(zt));
  }
  fwd.zbar = diff::scale(zsum, 1.0 / static_cast<double>(K));
  if (split) split->per_head += diff::mac_count() - mark;

  // Adversaries through the frozen target generators; constants by design.
  {
    diff::NoGradGuard ng;
    mark = diff::mac_count();
    auto prior_v = shared.prior_params(fwd.states);
    if (split) split->shared += diff::mac_count() - mark;
    mark = diff::mac_count();
    std::vector<double> xbar(B, 0.0);
    for (std::size_t i = 0; i < K; ++i) {
      auto z_adv = reparam(prior_v, gaussian_noise(B, L, rng));
      auto xt = heads[i].target_out(z_adv, fwd.states);
      for (std::size_t b = 0; b < B; ++b) xbar[b] += xt.data()[b];
    }
    for (auto& v : xbar) v /= static_cast<double>(K);
    fwd.xbar = column_tensor(xbar);
    if (split) split->per_head += diff::mac_count() - mark;
  }

  // The z fed to D alongside xbar: a live reparameterized prior draw.
  mark = diff::mac_count();
  auto prior_live = shared.prior_params(fwd.states);
  fwd.z_prior = reparam(prior_live, gaussian_noise(B, L, rng));
  if (split) split->shared += diff::mac_count() - mark;
  return fwd;
}

diff::Tensor discriminator_loss(const SharedVae& shared, const VaeForward& fwd) {
  auto l1 = shared.disc_logit(fwd.xbar.detach(), fwd.z_prior.detach(), fwd.states);
  auto l2 = shared.disc_logit(fwd.data_x.detach(), fwd.zbar.detach(), fwd.states);
  return diff::mean_t(diff::add(log_sigmoid(l1), log_one_minus_sigmoid(l2)));
}

diff::Tensor encoder_prior_loss(const SharedVae& shared, const VaeForward& fwd) {
  diff::ScopedFreeze freeze(shared.discriminator().parameters());
  auto l1 = shared.disc_logit(fwd.xbar, fwd.z_prior, fwd.states);
  auto l2 = shared.disc_logit(fwd.data_x, fwd.zbar, fwd.states);
  return diff::mean_t(diff::add(log_one_minus_sigmoid(l1), log_sigmoid(l2)));
}

diff::Tensor generator_loss(const Head& head, const VaeForward& fwd, int head_index,
                            const std::vector<double>* weights) {
  const auto& x = fwd.head_x[head_index];
  auto recon = head.generator_out(fwd.ztilde[head_index].detach(), fwd.states);
  auto err = diff::square_t(diff::sub(recon, diff::sum_rows(x)));
  if (weights == nullptr || weights->empty()) return diff::mean_t(err);
  double total = 0.0;
  for (double w : *weights) total += w;
  if (total <= 0.0) throw std::invalid_argument("generator_loss: weights sum to zero");
  auto wt = diff::Tensor::from_vector({weights->size()}, std::vector<double>(*weights));
  return diff::scale(diff::sum_t(diff::mul(err, wt)), 1.0 / total);
}

Adversaries make_adversaries(const std::vector<Head>& heads, const SharedVae& shared,
                             const UpdateBatch& batch, Rng& rng) {
  diff::NoGradGuard ng;
  auto fwd = prepare_update_batch(shared, heads, batch, rng);
  Adversaries adv;
  const std::size_t B = batch.states.size();
  const std::size_t L = static_cast<std::size_t>(shared.latent_dim());
  adv.zbar.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    adv.zbar[b].assign(fwd.zbar.data().begin() + b * L, fwd.zbar.data().begin() + (b + 1) * L);
  }
  adv.xbar = fwd.xbar.data();
  return adv;
}

}  // namespace bop::retdist
