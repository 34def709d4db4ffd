#include "kohn/forms.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "kohn/fields.hpp"

namespace kohn::forms {

namespace {

struct SlotTask {
  bool top = true;
  SigmaKey key;
};

int level_dim(const SpectralComplex& complex, int block, int level) {
  if (level < 0 || level >= complex.levels()) return 0;
  return complex.blocks()[static_cast<std::size_t>(block)].dims[static_cast<std::size_t>(level)];
}

std::set<int> touched_blocks(const FourierForm& phi) {
  std::set<int> out;
  for (const auto& [k, f] : phi.top) out.insert(k.block);
  for (const auto& [k, f] : phi.bot) out.insert(k.block);
  return out;
}

void require_blocks(const FourierForm& phi, const TransferBlocks& blocks) {
  for (int b : touched_blocks(phi))
    if (!blocks.covers(b)) throw UsageError("transfer blocks do not cover lambda block " + std::to_string(b));
}

const VectorXc* find(const std::map<SigmaKey, CoefficientField>& slots, const SigmaKey& key) {
  const auto it = slots.find(key);
  return it == slots.end() ? nullptr : &it->second.values;
}

// Runs the tasks in parallel and stores the results in σ order.
template <class Fn>
void fill(FourierForm& out, const std::vector<SlotTask>& tasks, Fn&& compute) {
  std::vector<VectorXc> results(tasks.size());
  parallel_for(tasks.size(), out.context->threads(), [&](std::size_t i) { results[i] = compute(tasks[i]); });
  const auto& space = out.context->space();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& slots = tasks[i].top ? out.top : out.bot;
    slots.insert_or_assign(tasks[i].key, CoefficientField{space, std::move(results[i]), 1});
  }
}

double slot_norm2(const fem::FESpace& space, const VectorXc& v) { return std::abs(v.dot(space.mass() * v)); }

std::uint64_t key_hash(const SigmaKey& k) {
  return static_cast<std::uint64_t>(k.block + 1) * 1000003ULL + static_cast<std::uint64_t>(k.q) * 1009ULL +
         static_cast<std::uint64_t>(k.index);
}

}  // namespace

// --- context ---------------------------------------------------------------------

Context::Context(std::shared_ptr<const SpectralComplex> spectrum, geo::DomainSpec domain, SpacePtr space, int threads)
    : spectrum_(std::move(spectrum)), domain_(std::move(domain)), space_(std::move(space)), threads_(std::max(1, threads)) {
  if (!spectrum_ || !space_) throw UsageError("form context needs a spectrum and a space");
}

double Context::beta(const SigmaKey& key) const {
  const auto& l = label(key);
  return (l.lambda + l.nu) / 2.0;
}

const solver::CompatibleOperator& Context::compatible(double beta) const {
  std::lock_guard lock(mutex_);
  auto& slot = compatible_[beta];
  if (!slot) slot = std::make_shared<const solver::CompatibleOperator>(space_, beta);
  return *slot;
}

TransferBlocks TransferBlocks::from(const SpectralComplex& complex) {
  TransferBlocks out;
  for (const auto& b : complex.blocks()) {
    std::vector<MatrixXc> per_level;
    for (int q = 0; q + 1 < static_cast<int>(b.dims.size()); ++q) per_level.push_back(b.transfer(q));
    out.T.push_back(std::move(per_level));
  }
  return out;
}

const MatrixXc& TransferBlocks::at(int block, int q) const {
  static const MatrixXc empty;
  if (!covers(block)) throw UsageError("transfer blocks do not cover lambda block " + std::to_string(block));
  const auto& levels = T[static_cast<std::size_t>(block)];
  if (q < 0 || q >= static_cast<int>(levels.size())) return empty;
  return levels[static_cast<std::size_t>(q)];
}

// --- forms ----------------------------------------------------------------------

FourierForm FourierForm::zero(ContextPtr context, int q) {
  FourierForm f;
  f.q = q;
  f.context = std::move(context);
  return f;
}

FourierForm FourierForm::random(ContextPtr context, int q, std::uint64_t seed) {
  FourierForm f = zero(context, q);
  std::vector<SlotTask> tasks;
  for (const auto& l : context->spectrum().labels(q)) tasks.push_back({true, l.key});
  for (const auto& l : context->spectrum().labels(q - 1)) tasks.push_back({false, l.key});
  fill(f, tasks, [&](const SlotTask& t) {
    const auto s = fields::mix_seed(seed, key_hash(t.key), t.top ? 1 : 2);
    return fields::random_field(context->space(), context->domain(), s, !t.top).values;
  });
  return f;
}

void FourierForm::check() const {
  if (!context) throw UsageError("form has no context");
  const auto& complex = context->spectrum();
  auto check_slots = [&](const std::map<SigmaKey, CoefficientField>& slots, int level, const char* what) {
    for (const auto& [k, field] : slots) {
      if (k.q != level)
        throw UsageError(std::string(what) + " slot at level " + std::to_string(k.q) + " in a form of degree " +
                         std::to_string(q));
      if (k.block < 0 || k.block >= static_cast<int>(complex.blocks().size()) || k.index < 0 ||
          k.index >= level_dim(complex, k.block, level))
        throw UsageError(std::string(what) + " slot refers to a label outside the spectrum");
      if (field.space != context->space() || field.values.size() != context->space()->num_dofs())
        throw UsageError(std::string(what) + " slot field lives on a different mesh");
    }
  };
  check_slots(top, q, "tangential");
  check_slots(bot, q - 1, "transverse");
}

double FourierForm::norm() const { return std::sqrt(std::max(0.0, inner_product(*this, *this).real())); }

FourierForm& FourierForm::axpy(Complex c, const FourierForm& other) {
  if (other.q != q || other.context != context) throw UsageError("axpy needs forms of the same degree and context");
  auto merge = [&](std::map<SigmaKey, CoefficientField>& dst, const std::map<SigmaKey, CoefficientField>& src) {
    for (const auto& [k, f] : src) {
      auto it = dst.find(k);
      if (it == dst.end())
        dst.emplace(k, CoefficientField{f.space, c * f.values, 1});
      else
        it->second.values += c * f.values;
    }
  };
  merge(top, other.top);
  merge(bot, other.bot);
  return *this;
}

Complex inner_product(const FourierForm& phi, const FourierForm& psi) {
  if (phi.q != psi.q) throw UsageError("inner product of forms with different degrees");
  if (!phi.context || !psi.context || &phi.context->spectrum() != &psi.context->spectrum() ||
      phi.context->space() != psi.context->space())
    throw UsageError("inner product of forms over different spectra or meshes");
  const auto& m = phi.context->space()->mass();
  Complex sum{0.0, 0.0};
  auto add = [&](const std::map<SigmaKey, CoefficientField>& a, const std::map<SigmaKey, CoefficientField>& b) {
    for (const auto& [k, f] : a)
      if (const VectorXc* g = find(b, k)) sum += g->dot(m * f.values);
  };
  add(phi.top, psi.top);
  add(phi.bot, psi.bot);
  return sum;
}

// --- operators ----------------------------------------------------------------------

FourierForm apply_dbar(const FourierForm& phi, const TransferBlocks& blocks) {
  phi.check();
  require_blocks(phi, blocks);
  const Context& ctx = *phi.context;
  const auto& complex = ctx.spectrum();
  const int q = phi.q;
  const int n = ctx.space()->num_dofs();
  std::vector<SlotTask> tasks;
  for (int b : touched_blocks(phi)) {
    for (int i = 0; i < level_dim(complex, b, q + 1); ++i) tasks.push_back({true, {b, q + 1, i}});
    for (int i = 0; i < level_dim(complex, b, q); ++i) tasks.push_back({false, {b, q, i}});
  }
  FourierForm out = FourierForm::zero(phi.context, q + 1);
  fill(out, tasks, [&](const SlotTask& t) -> VectorXc {
    const int b = t.key.block;
    VectorXc v = VectorXc::Zero(n);
    if (t.top) {
      const MatrixXc& T = blocks.at(b, q);
      for (int j = 0; j < T.cols(); ++j)
        if (const VectorXc* f = find(phi.top, {b, q, j})) v += T(t.key.index, j) * *f;
      return v;
    }
    if (const VectorXc* f = find(phi.top, t.key)) v = ctx.compatible(ctx.beta(t.key)).apply_A(*f);
    const MatrixXc& T = blocks.at(b, q - 1);
    for (int j = 0; j < T.cols(); ++j)
      if (const VectorXc* f = find(phi.bot, {b, q - 1, j})) v -= T(t.key.index, j) * *f;
    return v;
  });
  return out;
}

FourierForm apply_dbar_star(const FourierForm& phi, const TransferBlocks& blocks) {
  phi.check();
  require_blocks(phi, blocks);
  if (phi.q < 1) throw UsageError("dbar-star needs a form of degree >= 1");
  const Context& ctx = *phi.context;
  const auto& complex = ctx.spectrum();
  const int q = phi.q;
  const int n = ctx.space()->num_dofs();
  std::vector<SlotTask> tasks;
  for (int b : touched_blocks(phi)) {
    for (int i = 0; i < level_dim(complex, b, q - 1); ++i) tasks.push_back({true, {b, q - 1, i}});
    for (int i = 0; i < level_dim(complex, b, q - 2); ++i) tasks.push_back({false, {b, q - 2, i}});
  }
  FourierForm out = FourierForm::zero(phi.context, q - 1);
  fill(out, tasks, [&](const SlotTask& t) -> VectorXc {
    const int b = t.key.block;
    VectorXc v = VectorXc::Zero(n);
    if (t.top) {
      const MatrixXc& T = blocks.at(b, q - 1);
      for (int j = 0; j < T.rows(); ++j)
        if (const VectorXc* f = find(phi.top, {b, q, j})) v += std::conj(T(j, t.key.index)) * *f;
      if (const VectorXc* f = find(phi.bot, t.key)) v += ctx.compatible(ctx.beta(t.key)).apply_Adag(*f);
      return v;
    }
    const MatrixXc& T = blocks.at(b, q - 2);
    for (int j = 0; j < T.rows(); ++j)
      if (const VectorXc* f = find(phi.bot, {b, q - 1, j})) v -= std::conj(T(j, t.key.index)) * *f;
    return v;
  });
  return out;
}

FourierForm apply_box(const FourierForm& phi, const TransferBlocks& blocks) {
  phi.check();
  require_blocks(phi, blocks);
  const Context& ctx = *phi.context;
  for (const auto& [k, f] : phi.bot) {
    const double scale = f.values.cwiseAbs().maxCoeff();
    if (f.trace_max() > 1e-12 * std::max(scale, 1.0))
      throw DomainError("transverse slot " + ctx.label(k).id() +
                        " has nonzero boundary values; it is outside the domain of the transverse operator");
  }
  std::vector<SlotTask> tasks;
  for (const auto& [k, f] : phi.top) tasks.push_back({true, k});
  for (const auto& [k, f] : phi.bot) tasks.push_back({false, k});
  FourierForm out = FourierForm::zero(phi.context, phi.q);
  fill(out, tasks, [&](const SlotTask& t) -> VectorXc {
    const auto& a = ctx.compatible(ctx.beta(t.key));
    const double gamma = ctx.label(t.key).gamma;
    if (t.top) {
      const VectorXc& f = phi.top.at(t.key).values;
      return gamma * f + a.apply_Adag(a.apply_A(f));
    }
    const VectorXc& f = phi.bot.at(t.key).values;
    return gamma * f + a.apply_A(a.apply_Adag(f));
  });
  return out;
}

FourierForm kernel_part(const FourierForm& phi) {
  phi.check();
  const Context& ctx = *phi.context;
  std::vector<SlotTask> tasks;
  for (const auto& [k, f] : phi.top)
    if (ctx.label(k).gamma <= spectrum::kZeroGamma) tasks.push_back({true, k});
  FourierForm out = FourierForm::zero(phi.context, phi.q);
  fill(out, tasks, [&](const SlotTask& t) {
    return ctx.compatible(ctx.beta(t.key)).kernel_projection(phi.top.at(t.key).values);
  });
  return out;
}

// --- solves -------------------------------------------------------------------------

BoxMode box_mode_from_string(const std::string& name) {
  if (name == "plus_one" || name == "plus-one") return BoxMode::plus_one;
  if (name == "kernel_orthogonal" || name == "kernel-orthogonal") return BoxMode::kernel_orthogonal;
  throw ConfigError("unknown box mode '" + name + "'");
}

std::string to_string(BoxMode mode) { return mode == BoxMode::plus_one ? "plus_one" : "kernel_orthogonal"; }

BoxSolution solve_box(const FourierForm& f, const TransferBlocks& blocks, const BoxSolveOptions& options) {
  f.check();
  require_blocks(f, blocks);
  const Context& ctx = *f.context;
  const int n = ctx.spectrum().n();
  const bool orthogonal = options.mode == BoxMode::kernel_orthogonal;
  if (orthogonal && (f.q < 1 || f.q > n - 2))
    throw ConfigError("kernel_orthogonal solve needs 1 <= q <= n-2 (q = " + std::to_string(f.q) +
                      ", n = " + std::to_string(n) + ")");
  const double c = orthogonal ? 0.0 : 1.0;
  const auto& space = ctx.space();

  std::vector<SlotTask> tasks;
  for (const auto& [k, v] : f.top) tasks.push_back({true, k});
  for (const auto& [k, v] : f.bot) tasks.push_back({false, k});
  std::vector<VectorXc> u(tasks.size()), kernel(tasks.size());
  parallel_for(tasks.size(), ctx.threads(), [&](std::size_t i) {
    const SlotTask& t = tasks[i];
    const SigmaLabel& sigma = ctx.label(t.key);
    const auto& a = ctx.compatible(ctx.beta(t.key));
    const double shift = c + sigma.gamma;
    if (!t.top) {
      u[i] = a.solve_transverse(shift, f.bot.at(t.key).values);
      return;
    }
    const CoefficientField& rhs = f.top.at(t.key);
    if (shift > spectrum::kZeroGamma) {
      u[i] = a.solve_tangential(shift, rhs.values);
    } else if (options.kernel == solver::KernelMode::discrete) {
      u[i] = a.tangential_pseudo_solve(rhs.values, &kernel[i]);
    } else {
      auto sol = solver::solve_tangential(sigma, rhs, options.degree_cap, ctx.domain(), solver::KernelMode::capped);
      u[i] = std::move(sol.u.values);
      kernel[i] = std::move(sol.f_kernel_part.values);
    }
  });

  BoxSolution out{FourierForm::zero(f.context, f.q), FourierForm::zero(f.context, f.q), {}, 0.0};
  FourierForm target = f;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const SlotTask& t = tasks[i];
    const SigmaLabel& sigma = ctx.label(t.key);
    const VectorXc& rhs = t.top ? f.top.at(t.key).values : f.bot.at(t.key).values;
    const double fn = std::sqrt(slot_norm2(*space, rhs));
    const double un = std::sqrt(slot_norm2(*space, u[i]));
    out.constants.push_back({sigma.id(), t.top ? "top" : "bot", sigma.gamma, sigma.lambda, fn == 0.0 ? 0.0 : un / fn});
    if (kernel[i].size() > 0) {
      out.f_kernel.top.emplace(t.key, CoefficientField{space, kernel[i], 1});
      target.top.at(t.key).values -= kernel[i];
    }
    (t.top ? out.u.top : out.u.bot).emplace(t.key, CoefficientField{space, std::move(u[i]), 1});
  }

  // Residual in the dual norm of each slot's test space.
  FourierForm lhs = apply_box(out.u, blocks);
  if (c != 0.0) lhs.axpy(c, out.u);
  double r2 = 0.0, b2 = 0.0;
  for (const auto& [k, v] : target.top) {
    const VectorXc r = space->mass() * (lhs.top.at(k).values - v.values);
    r2 += std::abs(r.dot(space->mass_solve(r)));
    b2 += slot_norm2(*space, v.values);
  }
  for (const auto& [k, v] : target.bot) {
    const VectorXc r = space->to_interior(space->mass() * (lhs.bot.at(k).values - v.values));
    const VectorXc load = space->to_interior(space->mass() * v.values);
    const auto& a = ctx.compatible(ctx.beta(k));
    r2 += std::abs(r.dot(space->to_interior(a.interior_mass_solve(r))));
    b2 += std::abs(load.dot(space->to_interior(a.interior_mass_solve(load))));
  }
  out.residual = b2 == 0.0 ? std::sqrt(r2) : std::sqrt(r2 / b2);
  return out;
}

DbarSolution solve_dbar(const FourierForm& varsigma, const TransferBlocks& blocks, const DbarOptions& options) {
  varsigma.check();
  if (varsigma.q < 1) throw UsageError("dbar solve needs a form of degree >= 1");
  DbarSolution out;
  out.phi = FourierForm::zero(varsigma.context, varsigma.q - 1);
  const double sn = varsigma.norm();
  if (sn == 0.0) return out;
  out.closedness = apply_dbar(varsigma, blocks).norm() / sn;
  out.kernel_component = kernel_part(varsigma).norm() / sn;
  if (out.closedness > options.precondition_tol || out.kernel_component > options.precondition_tol) {
    std::ostringstream msg;
    msg << "right-hand side rejected: |dbar f|/|f| = " << out.closedness << ", |P_ker f|/|f| = " << out.kernel_component
        << " (tolerance " << options.precondition_tol << ")";
    throw RejectedInput(msg.str());
  }
  BoxSolveOptions box;
  box.mode = BoxMode::kernel_orthogonal;
  const BoxSolution alpha = solve_box(varsigma, blocks, box);
  out.phi = apply_dbar_star(alpha.u, blocks);
  FourierForm diff = apply_dbar(out.phi, blocks);
  diff.axpy(-1.0, varsigma);
  out.residual = diff.norm() / sn;
  out.stability = out.phi.norm() / sn;
  if (out.residual > options.residual_tol) {
    std::ostringstream msg;
    msg << "dbar solve residual " << out.residual << " exceeds " << options.residual_tol;
    throw NumericalError(msg.str());
  }
  return out;
}

std::vector<FourierForm> box_kernel_basis(const ContextPtr& context, int q, int degree_cap) {
  const int n = context->spectrum().n();
  if (q < 1 || q > n - 2)
    throw UsageError("kernel basis needs 1 <= q <= n-2 (q = " + std::to_string(q) + ", n = " + std::to_string(n) + ")");
  const auto& space = context->space();
  const auto& m = space->mass();
  std::vector<FourierForm> out;
  for (const auto& sigma : context->spectrum().labels(q)) {
    if (sigma.gamma > spectrum::kZeroGamma) continue;
    const auto basis = solver::kernel_basis(sigma, context->domain(), space, degree_cap);
    const auto& a = context->compatible(context->beta(sigma.key));
    std::vector<VectorXc> members;
    for (const auto& field : basis.fields) {
      VectorXc v = a.kernel_projection(field.values);
      const double before = std::sqrt(std::abs(v.dot(m * v)));
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& w : members) v -= w.dot(m * v) * w;
      const double nv = std::sqrt(std::abs(v.dot(m * v)));
      if (nv <= 1e-10 * before) continue;
      members.push_back(v / nv);
    }
    for (auto& v : members) {
      FourierForm f = FourierForm::zero(context, q);
      f.top.emplace(sigma.key, CoefficientField{space, std::move(v), 1});
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace kohn::forms
