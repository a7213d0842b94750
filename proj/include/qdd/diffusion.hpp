#pragma once

// Forward noising, the training loop, iterative sampling, and inpainting.
//
// Training pairs follow x_s = sqrt(abar_s) x0 + sqrt(1-abar_s) eps with one
// eps shared by x_t and x_{t-1}, so the data-mode target is the same sample
// one step earlier on the noising path (abar_0 = 1 recovers x0 at t=1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qdd/grad.hpp"
#include "qdd/image.hpp"
#include "qdd/models.hpp"
#include "qdd/parallel.hpp"
#include "qdd/rng.hpp"

namespace qdd {

enum class TargetMode { Data, Noise };

struct DiffusionSchedule {
    int tau = 10;
    std::vector<double> betas;       // beta_1 .. beta_tau
    std::vector<double> alpha_bars;  // abar_1 .. abar_tau, strictly decreasing
    TargetMode target_mode = TargetMode::Data;

    static DiffusionSchedule linear(int tau, double beta_start = 0.05, double beta_end = 0.5,
                                    TargetMode mode = TargetMode::Data) {
        DiffusionSchedule s;
        s.tau = tau;
        s.target_mode = mode;
        s.betas.resize(std::size_t(tau));
        for (int t = 0; t < tau; ++t) {
            const double r = tau == 1 ? 0.0 : double(t) / double(tau - 1);
            s.betas[std::size_t(t)] = beta_start * (1.0 - r) + beta_end * r;  // exact at both ends
        }
        s.recompute_alpha_bars();
        s.validate();
        return s;
    }

    void recompute_alpha_bars() {
        alpha_bars.resize(betas.size());
        double prod = 1.0;
        for (std::size_t t = 0; t < betas.size(); ++t) {
            prod *= 1.0 - betas[t];
            alpha_bars[t] = prod;
        }
    }

    /// abar_t with abar_0 = 1.
    double alpha_bar(int t) const {
        if (t < 0 || t > tau) throw std::out_of_range("alpha_bar: step out of range");
        return t == 0 ? 1.0 : alpha_bars[std::size_t(t - 1)];
    }

    double beta(int t) const {
        if (t < 1 || t > tau) throw std::out_of_range("beta: step out of range");
        return betas[std::size_t(t - 1)];
    }

    void validate() const {
        if (tau < 0) throw std::invalid_argument("schedule: negative tau");
        if (int(betas.size()) != tau || betas.size() != alpha_bars.size())
            throw std::invalid_argument("schedule: per-step vectors must have length tau");
        for (std::size_t t = 0; t < betas.size(); ++t) {
            if (!(betas[t] > 0.0 && betas[t] < 1.0))
                throw std::invalid_argument("schedule: beta out of (0, 1)");
            if (t > 0 && betas[t] < betas[t - 1])
                throw std::invalid_argument("schedule: betas must be non-decreasing");
            const double prev = t == 0 ? 1.0 : alpha_bars[t - 1];
            if (!(alpha_bars[t] < prev))
                throw std::invalid_argument("schedule: alpha_bar must be strictly decreasing");
        }
    }
};

struct NoisedSample {
    ImageTensor x_t;
    ImageTensor epsilon;
};

/// x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps, eps ~ N(0,1) per pixel.
inline NoisedSample forward_noise(const ImageTensor& x0, int t, const DiffusionSchedule& schedule,
                                  Rng& rng) {
    if (t < 1 || t > schedule.tau) throw std::out_of_range("forward_noise: step out of range");
    const double abar = schedule.alpha_bar(t);
    const double sig = std::sqrt(1.0 - abar), mu = std::sqrt(abar);
    NoisedSample out{x0, x0};
    for (std::size_t i = 0; i < x0.values.size(); ++i) {
        const double eps = normal(rng);
        out.epsilon.values[i] = eps;
        out.x_t.values[i] = mu * x0.values[i] + sig * eps;
    }
    return out;
}

/// The x_s on the same noising path (shared eps); s may be 0.
inline ImageTensor noised_at(const ImageTensor& x0, const ImageTensor& epsilon, int s,
                             const DiffusionSchedule& schedule) {
    const double abar = schedule.alpha_bar(s);
    const double sig = std::sqrt(1.0 - abar), mu = std::sqrt(abar);
    ImageTensor out = x0;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = mu * x0.values[i] + sig * epsilon.values[i];
    return out;
}

enum class GradientMethod { ParameterShift, Adjoint };

/// Per-sample MSE loss and its adjoint-mode gradient for a Q-Dense forward
/// pass (embed -> circuit -> readout -> truncate -> rescale).
inline std::vector<double> adjoint_loss_grad(const QDenseModel& model, std::span<const double> params,
                                             const ImageTensor& x, const ImageTensor& target,
                                             std::optional<int> label, double* loss_out) {
    const Embedded in = model.embed(x, label);
    const CircuitSpec& circuit = model.circuit(label);
    const int n_measured = model.config().n_image_qubits;
    const std::size_t n_out = x.size();
    const double norm = in.norm;
    auto cotangent = [&](const StateVector& psi) {
        const std::vector<double> out = readout(psi, n_measured, int(n_out), norm);
        double loss = 0.0;
        std::vector<cplx> w(psi.dim(), cplx(0, 0));
        const std::size_t block = psi.dim() >> n_measured;
        const double scale = 2.0 / double(n_out);
        for (std::size_t k = 0; k < n_out; ++k) {
            const double diff = out[k] - target.values[k];
            loss += diff * diff;
            const double dl_dp = scale * diff * norm;
            for (std::size_t i = k * block; i < (k + 1) * block; ++i) w[i] = dl_dp * psi.amps[i];
        }
        if (loss_out) *loss_out = loss / double(n_out);
        return w;
    };
    return adjoint_state_grad(circuit, in.state, params, cotangent);
}

struct TrainStepResult {
    double loss = 0.0;  // summed over the batch, before the update
};

/// One optimization step: per sample draw t ~ U{1..tau}, noise to x_t, regress
/// onto x_{t-1} (data mode) or eps (noise mode); loss is the MSE summed over
/// the batch; parameters take one Adam step and are remapped.
template <class Model>
TrainStepResult train_step(const Model& model, ParamStore& params, std::span<const ImageTensor> batch,
                           std::span<const int> labels, const DiffusionSchedule& schedule, double lr,
                           Rng& rng, GradientMethod method = GradientMethod::ParameterShift) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    if (!labels.empty() && labels.size() != batch.size())
        throw std::invalid_argument("train_step: label count mismatch");
    schedule.validate();
    if (schedule.tau < 1) throw std::invalid_argument("train_step: schedule has no steps");

    const std::size_t n = batch.size();
    std::vector<ImageTensor> inputs(n), targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int t = uniform_int(rng, 1, schedule.tau);
        NoisedSample ns = forward_noise(batch[i], t, schedule, rng);
        targets[i] = schedule.target_mode == TargetMode::Data
                         ? noised_at(batch[i], ns.epsilon, t - 1, schedule)
                         : ns.epsilon;
        inputs[i] = std::move(ns.x_t);
    }
    auto label_of = [&](std::size_t i) -> std::optional<int> {
        if (labels.empty()) return std::nullopt;
        return labels[i];
    };

    double loss = 0.0;
    std::vector<double> grad;

    bool used_adjoint = false;
    if constexpr (requires(double* lp) { adjoint_loss_grad(model, params.values, inputs[0], targets[0], label_of(0), lp); }) {
        if (method == GradientMethod::Adjoint) {
            used_adjoint = true;
            std::vector<std::vector<double>> grads(n);
            std::vector<double> losses(n, 0.0);
            parallel_for(n, [&](std::size_t i) {
                grads[i] = adjoint_loss_grad(model, params.values, inputs[i], targets[i], label_of(i),
                                             &losses[i]);
            });
            grad.assign(params.size(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                loss += losses[i];
                for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += grads[i][j];
            }
        }
    }
    if (!used_adjoint) {
        const std::size_t m = inputs[0].size();
        OutputLossFn fn;
        fn.outputs = [&](std::span<const double> p) {
            std::vector<double> out;
            out.reserve(n * m);
            for (std::size_t i = 0; i < n; ++i) {
                const ImageTensor y = model.forward(p, inputs[i], label_of(i));
                out.insert(out.end(), y.values.begin(), y.values.end());
            }
            return out;
        };
        fn.loss = [&](std::span<const double> out) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < m; ++k) {
                    const double d = out[i * m + k] - targets[i].values[k];
                    s += d * d;
                }
            return s / double(m);
        };
        fn.loss_grad = [&](std::span<const double> out) {
            std::vector<double> dl(out.size());
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < m; ++k)
                    dl[i * m + k] = 2.0 * (out[i * m + k] - targets[i].values[k]) / double(m);
            return dl;
        };
        const std::vector<double> base = fn.outputs(params.values);
        loss = fn.loss(base);
        grad = parameter_shift_grad(fn, params.values);
    }

    if (!std::isfinite(loss)) throw std::runtime_error("train_step: non-finite loss");
    params = adam_step(std::move(params), grad, lr);
    return {loss};
}

struct SampleTrajectory {
    std::vector<ImageTensor> steps;  // x_tau first, x_0 last
    const ImageTensor& final_image() const { return steps.back(); }
};

/// x_tau ~ N(0,1) clipped to the value range, then tau reverse steps:
/// data mode applies the model directly; noise mode removes the predicted
/// noise via x_{t-1} = (x_t - sqrt(1-abar_t) eps_hat) / sqrt(1-beta_t).
template <class Model>
std::vector<SampleTrajectory> sample(const Model& model, std::span<const double> params,
                                     const DiffusionSchedule& schedule, int n_images, int height,
                                     int width, std::optional<int> label, Rng& rng) {
    schedule.validate();
    std::vector<SampleTrajectory> out(std::size_t(n_images), SampleTrajectory{});
    for (auto& traj : out) {
        ImageTensor x(1, height, width);
        for (double& v : x.values)
            v = std::clamp(normal(rng), x.value_range[0], x.value_range[1]);
        traj.steps.push_back(x);
        for (int t = schedule.tau; t >= 1; --t) {
            if (schedule.target_mode == TargetMode::Data) {
                x = model.forward(params, x, label);
            } else {
                const ImageTensor eps_hat = model.forward(params, x, label);
                const double sig = std::sqrt(1.0 - schedule.alpha_bar(t));
                const double div = std::sqrt(1.0 - schedule.beta(t));
                for (std::size_t i = 0; i < x.values.size(); ++i)
                    x.values[i] = (x.values[i] - sig * eps_hat.values[i]) / div;
            }
            traj.steps.push_back(x);
        }
    }
    return out;
}

struct InpaintResult {
    ImageTensor image;
    double unknown_mse = 0.0;  // MSE against the original over unknown pixels
};

/// Reconstructs the unknown region (mask false) of `original`; known pixels
/// are restored after every iteration when reset_each_step is set.
template <class Model>
InpaintResult inpaint(const Model& model, std::span<const double> params, const ImageTensor& original,
                      const std::vector<std::uint8_t>& known_mask, const DiffusionSchedule& schedule,
                      bool reset_each_step, std::optional<int> label, Rng& rng) {
    schedule.validate();
    if (known_mask.size() != original.values.size())
        throw std::invalid_argument("inpaint: mask size mismatch");
    const std::size_t known = std::size_t(std::count_if(known_mask.begin(), known_mask.end(),
                                                        [](std::uint8_t b) { return b != 0; }));
    if (known == 0 || known == known_mask.size())
        throw std::invalid_argument("inpaint: mask must mark some but not all pixels as known");

    ImageTensor x = original;
    for (std::size_t i = 0; i < x.values.size(); ++i)
        if (!known_mask[i]) x.values[i] = std::clamp(normal(rng), x.value_range[0], x.value_range[1]);
    for (int t = schedule.tau; t >= 1; --t) {
        if (schedule.target_mode == TargetMode::Data) {
            x = model.forward(params, x, label);
        } else {
            const ImageTensor eps_hat = model.forward(params, x, label);
            const double sig = std::sqrt(1.0 - schedule.alpha_bar(t));
            const double div = std::sqrt(1.0 - schedule.beta(t));
            for (std::size_t i = 0; i < x.values.size(); ++i)
                x.values[i] = (x.values[i] - sig * eps_hat.values[i]) / div;
        }
        if (reset_each_step)
            for (std::size_t i = 0; i < x.values.size(); ++i)
                if (known_mask[i]) x.values[i] = original.values[i];
    }
    double mse = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        if (known_mask[i]) continue;
        const double d = x.values[i] - original.values[i];
        mse += d * d;
    }
    mse /= double(known_mask.size() - known);
    return {std::move(x), mse};
}

}  // namespace qdd
