#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridadv/nn.hpp"
#include "gridadv/tensor.hpp"
#include "gridadv/train.hpp"

namespace gridadv {

enum class Kernel {
    /// delta = eps * g
    scaled_gradient,
    /// delta = eps * sign(g), sign(0) = 0
    gradient_sign,
};

std::string_view to_string(Kernel kernel);
Kernel kernel_from_string(std::string_view name);

/// Per-entry [lo, hi] box for adversarial inputs.
struct ClipBounds {
    std::vector<double> lo;
    std::vector<double> hi;

    static ClipBounds uniform(std::size_t entries, double lo, double hi);
};

struct AttackSpec {
    /// Per-entry perturbation magnitude.
    double epsilon = 0.1;
    /// Fraction of input entries that may be modified.
    double gamma = 1.0;
    Kernel kernel = Kernel::gradient_sign;
    /// Flat positions the attacker may touch; nullopt means every entry.
    std::optional<std::vector<std::size_t>> mask;
    std::optional<ClipBounds> clip;
    RankBy rank = RankBy::absolute;
};

/// Throws ConfigError for eps < 0, gamma outside [0, 1], inverted clip
/// bounds, or mask/clip positions outside a sample of `entries` values.
void validate(const AttackSpec& spec, std::size_t entries);

/// Gradient of the eval-mode loss of a single sample with respect to that
/// sample. `x` is one sample ([F] for an MLP, [T x F] for an RNN); `y` is
/// its one-hot row or scalar target. The result has the shape of `x`.
Tensor input_gradient(const Model& model, const Tensor& x, const Tensor& y, LossKind loss);

/// x* = clip(x + kernel(eps, g)) over every entry.
Tensor craft_dense(const Tensor& x, const Tensor& g, const AttackSpec& spec);

/// k = min(ceil(gamma * entries), mask_size).
std::size_t selection_size(std::size_t entries, double gamma, std::size_t mask_size);

/// The k entries with the largest gradient (by spec.rank) among the mask.
/// Sorted ascending.
std::vector<std::size_t> select_entries(const Tensor& g, double gamma,
                                        const std::optional<std::vector<std::size_t>>& mask,
                                        RankBy rank = RankBy::absolute);

/// Applies the kernel only on select_entries(); every other entry of x is
/// copied unchanged, then the result is clipped.
Tensor craft_sparse(const Tensor& x, const Tensor& g, const AttackSpec& spec);

struct AdversarialRecord {
    std::size_t sample_id = 0;
    Tensor original;
    Tensor adversarial;
    Tensor target;
    /// Surrogate loss on the original and on the adversarial input.
    double loss_before = 0.0;
    double loss_after = 0.0;
};

struct AdversarialSet {
    std::vector<AdversarialRecord> records;
    AttackSpec spec;
    std::string surrogate_fingerprint;

    /// Adversarial inputs stacked along a leading sample axis.
    Tensor adversarial_inputs() const;
    Tensor targets() const;
};

/// The attacker's own model: architecture and training recipe.
struct SurrogateSpec {
    Architecture arch;
    Hyperparams hyper;
};

std::string model_fingerprint(const Model& model);

/// Trains a fresh surrogate on the attacker's data. Initialisation and
/// training are both seeded from spec.hyper.seed.
Model train_surrogate(const Dataset& train, const SurrogateSpec& spec);

/// Crafts adversarial versions of the first n_adv samples of `clean` with
/// one sparse gradient step on the surrogate. Samples are independent and
/// are spread over `threads` workers.
AdversarialSet craft_with_surrogate(const Model& surrogate, const Dataset& clean,
                                    const AttackSpec& spec, std::size_t n_adv,
                                    unsigned threads = 1);

/// Black-box pipeline: train a surrogate on `train`, then craft against it.
/// No victim model is involved.
AdversarialSet craft_adversarial_set(const Dataset& train, const Dataset& clean,
                                     const SurrogateSpec& surrogate, const AttackSpec& spec,
                                     std::size_t n_adv, unsigned threads = 1);

/// One row per sample:
///   sample_id,orig_0..orig_{n-1},adv_0..adv_{n-1},target_0..target_{c-1}
/// after a `# gridadv-adv v1 shape=[...] targets=c` header.
void write_adversarial_csv(std::ostream& out, const AdversarialSet& set);

/// Inputs and targets read back from write_adversarial_csv output.
Dataset read_adversarial_csv(std::string_view text);

nlohmann::json attack_spec_to_json(const AttackSpec& spec);
/// Spec, surrogate fingerprint, and aggregate perturbation statistics.
nlohmann::json adversarial_summary(const AdversarialSet& set);

}  // namespace gridadv
