#include "gridadv/attack.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "gridadv/csv.hpp"
#include "gridadv/error.hpp"
#include "gridadv/parallel.hpp"

namespace gridadv {

using nlohmann::json;

std::string_view to_string(Kernel kernel) {
    return kernel == Kernel::gradient_sign ? "gradient-sign" : "scaled-gradient";
}

Kernel kernel_from_string(std::string_view name) {
    if (name == "gradient-sign" || name == "sign") return Kernel::gradient_sign;
    if (name == "scaled-gradient" || name == "scaled") return Kernel::scaled_gradient;
    throw ConfigError("unknown perturbation kernel '" + std::string(name) + "'");
}

ClipBounds ClipBounds::uniform(std::size_t entries, double lo, double hi) {
    return {std::vector<double>(entries, lo), std::vector<double>(entries, hi)};
}

void validate(const AttackSpec& spec, std::size_t entries) {
    if (!(spec.epsilon >= 0.0) || !std::isfinite(spec.epsilon)) {
        throw ConfigError("epsilon must be a finite value >= 0");
    }
    if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (spec.mask) {
        for (std::size_t i : *spec.mask) {
            if (i >= entries) {
                throw ConfigError("feature mask position " + std::to_string(i) +
                                  " outside a sample of " + std::to_string(entries) + " entries");
            }
        }
    }
    if (spec.clip) {
        if (spec.clip->lo.size() != entries || spec.clip->hi.size() != entries) {
            throw ConfigError("clip bounds must cover all " + std::to_string(entries) +
                              " entries");
        }
        for (std::size_t i = 0; i < entries; ++i) {
            if (!(spec.clip->lo[i] <= spec.clip->hi[i])) {
                throw ConfigError("clip bound lo > hi at entry " + std::to_string(i));
            }
        }
    }
}

Tensor input_gradient(const Model& model, const Tensor& x, const Tensor& y, LossKind loss) {
    Tensor xb, yb;
    if (std::holds_alternative<MlpModel>(model)) {
        xb = x.reshaped({1, x.size()});
        yb = y.reshaped({1, y.size()});
    } else {
        const auto& arch = std::get<RnnModel>(model).arch;
        if (x.size() != arch.steps * arch.features) {
            throw ShapeError("input_gradient: sample " + shape_string(x.shape()) +
                             " does not fit a [" + std::to_string(arch.steps) + " x " +
                             std::to_string(arch.features) + "] window");
        }
        xb = x.reshaped({1, arch.steps, arch.features});
        yb = y.reshaped({1});
    }
    return loss_and_gradients(model, xb, yb, loss).grads.input.reshaped(x.shape());
}

namespace {

double kernel_delta(Kernel kernel, double eps, double g) {
    if (kernel == Kernel::scaled_gradient) return eps * g;
    return g > 0.0 ? eps : (g < 0.0 ? -eps : 0.0);
}

// Perturbs entry i in place. Clipping keeps the perturbed value inside the
// box, widened to include the original value so an out-of-box original is
// never pushed further out. For the sign kernel the rounded step is pulled
// back until |x* - x| <= eps holds in floating point.
void perturb(const Tensor& x, Tensor& out, std::size_t i, double g, const AttackSpec& spec) {
    const double delta = kernel_delta(spec.kernel, spec.epsilon, g);
    if (delta == 0.0) return;
    const double orig = x[i];
    double v = orig + delta;
    if (spec.kernel == Kernel::gradient_sign) {
        while (std::abs(v - orig) > spec.epsilon) v = std::nextafter(v, orig);
    }
    if (spec.clip) {
        const double lo = std::min(spec.clip->lo[i], orig);
        const double hi = std::max(spec.clip->hi[i], orig);
        v = std::clamp(v, lo, hi);
    }
    out[i] = v;
}

}  // namespace

Tensor craft_dense(const Tensor& x, const Tensor& g, const AttackSpec& spec) {
    require_same_shape(x, g, "craft_dense");
    validate(spec, x.size());
    Tensor out = x;
    for (std::size_t i = 0; i < x.size(); ++i) perturb(x, out, i, g[i], spec);
    return out;
}

std::size_t selection_size(std::size_t entries, double gamma, std::size_t mask_size) {
    // The small offset keeps products such as (1/3) * 3 from rounding up a whole entry.
    const double raw = std::ceil(gamma * static_cast<double>(entries) - 1e-9);
    const auto k = static_cast<std::size_t>(std::max(0.0, raw));
    return std::min({k, mask_size, entries});
}

std::vector<std::size_t> select_entries(const Tensor& g, double gamma,
                                        const std::optional<std::vector<std::size_t>>& mask,
                                        RankBy rank) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (!mask) return top_k_indices(g.data(), selection_size(g.size(), gamma, g.size()), rank);

    std::vector<std::size_t> positions = *mask;
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    std::vector<double> restricted(positions.size());
    for (std::size_t j = 0; j < positions.size(); ++j) {
        if (positions[j] >= g.size()) {
            throw ConfigError("feature mask position " + std::to_string(positions[j]) +
                              " out of range");
        }
        restricted[j] = g[positions[j]];
    }
    const auto picked =
        top_k_indices(restricted, selection_size(g.size(), gamma, positions.size()), rank);
    std::vector<std::size_t> out;
    out.reserve(picked.size());
    for (std::size_t j : picked) out.push_back(positions[j]);
    return out;
}

Tensor craft_sparse(const Tensor& x, const Tensor& g, const AttackSpec& spec) {
    require_same_shape(x, g, "craft_sparse");
    validate(spec, x.size());
    Tensor out = x;
    for (std::size_t i : select_entries(g, spec.gamma, spec.mask, spec.rank)) {
        perturb(x, out, i, g[i], spec);
    }
    return out;
}

Tensor AdversarialSet::adversarial_inputs() const {
    if (records.empty()) return {};
    Shape shape = records.front().adversarial.shape();
    shape.insert(shape.begin(), records.size());
    std::vector<double> data;
    data.reserve(element_count(shape));
    for (const auto& r : records) data.insert(data.end(), r.adversarial.data().begin(), r.adversarial.data().end());
    return Tensor(std::move(shape), std::move(data));
}

Tensor AdversarialSet::targets() const {
    if (records.empty()) return {};
    Shape shape = records.front().target.shape();
    shape.insert(shape.begin(), records.size());
    std::vector<double> data;
    for (const auto& r : records) data.insert(data.end(), r.target.data().begin(), r.target.data().end());
    return Tensor(std::move(shape), std::move(data));
}

std::string model_fingerprint(const Model& model) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << parameter_digest(model);
    return out.str();
}

Model train_surrogate(const Dataset& train, const SurrogateSpec& spec) {
    return train_model(spec.arch, train, spec.hyper).model;
}

AdversarialSet craft_with_surrogate(const Model& surrogate, const Dataset& clean,
                                    const AttackSpec& spec, std::size_t n_adv,
                                    unsigned threads) {
    validate(clean);
    if (n_adv > clean.size()) {
        throw ConfigError("requested " + std::to_string(n_adv) + " adversarial examples from " +
                          std::to_string(clean.size()) + " clean samples");
    }
    Shape sample_shape(clean.inputs.shape().begin() + 1, clean.inputs.shape().end());
    Shape target_shape(clean.targets.shape().begin() + 1, clean.targets.shape().end());
    validate(spec, element_count(sample_shape));
    const LossKind loss = default_loss(surrogate);

    AdversarialSet set;
    set.spec = spec;
    set.surrogate_fingerprint = model_fingerprint(surrogate);
    set.records.resize(n_adv);
    parallel_for(n_adv, threads, [&](std::size_t i) {
        const auto xr = clean.inputs.row(i);
        const auto yr = clean.targets.row(i);
        Tensor x(sample_shape, std::vector<double>(xr.begin(), xr.end()));
        Tensor y(target_shape, std::vector<double>(yr.begin(), yr.end()));
        const Tensor g = input_gradient(surrogate, x, y, loss);
        Tensor adv = craft_sparse(x, g, spec);

        auto batched = [&](const Tensor& t, const Tensor& like) {
            Shape s = like.shape();
            s.insert(s.begin(), 1);
            return t.reshaped(s);
        };
        const Tensor yb = batched(y, y);
        AdversarialRecord& rec = set.records[i];
        rec.sample_id = i;
        rec.loss_before = evaluate_loss(surrogate, batched(x, x), yb, loss);
        rec.loss_after = evaluate_loss(surrogate, batched(adv, x), yb, loss);
        rec.original = std::move(x);
        rec.adversarial = std::move(adv);
        rec.target = std::move(y);
    });
    return set;
}

AdversarialSet craft_adversarial_set(const Dataset& train, const Dataset& clean,
                                     const SurrogateSpec& surrogate, const AttackSpec& spec,
                                     std::size_t n_adv, unsigned threads) {
    if (n_adv > clean.size()) {
        throw ConfigError("requested " + std::to_string(n_adv) + " adversarial examples from " +
                          std::to_string(clean.size()) + " clean samples");
    }
    const Model model = train_surrogate(train, surrogate);
    return craft_with_surrogate(model, clean, spec, n_adv, threads);
}

void write_adversarial_csv(std::ostream& out, const AdversarialSet& set) {
    if (set.records.empty()) {
        out << "# gridadv-adv v1 shape=[] targets=0\nsample_id\n";
        return;
    }
    const Tensor& first = set.records.front().original;
    const std::size_t n = first.size();
    const std::size_t c = set.records.front().target.size();
    out << "# gridadv-adv v1 shape=" << shape_string(first.shape()) << " targets=" << c << '\n';
    out << "sample_id";
    for (std::size_t i = 0; i < n; ++i) out << ",orig_" << i;
    for (std::size_t i = 0; i < n; ++i) out << ",adv_" << i;
    for (std::size_t i = 0; i < c; ++i) out << ",target_" << i;
    out << '\n';
    for (const auto& r : set.records) {
        out << r.sample_id;
        for (double v : r.original.data()) out << ',' << format_double(v);
        for (double v : r.adversarial.data()) out << ',' << format_double(v);
        for (double v : r.target.data()) out << ',' << format_double(v);
        out << '\n';
    }
}

Dataset read_adversarial_csv(std::string_view text) {
    auto lines = split(text, '\n');
    if (lines.empty() || !trim(lines[0]).starts_with("# gridadv-adv v1 ")) {
        throw ParseError("missing '# gridadv-adv v1' header", 1);
    }
    const std::string_view header = trim(lines[0]);
    const auto shape_pos = header.find("shape=[");
    const auto target_pos = header.find(" targets=");
    if (shape_pos == std::string_view::npos || target_pos == std::string_view::npos) {
        throw ParseError("header lacks shape= or targets=", 1);
    }
    const auto shape_end = header.find(']', shape_pos);
    Shape shape;
    const auto dims = header.substr(shape_pos + 7, shape_end - shape_pos - 7);
    if (!dims.empty()) {
        for (auto d : split(dims, 'x')) shape.push_back(parse_size(d, 1));
    }
    const std::size_t c = parse_size(header.substr(target_pos + 9), 1);
    const std::size_t n = element_count(shape);

    std::vector<double> inputs, targets;
    std::size_t rows = 0;
    for (std::size_t ln = 2; ln < lines.size(); ++ln) {
        const auto line = trim(lines[ln]);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 1 + 2 * n + c) {
            throw ParseError("expected " + std::to_string(1 + 2 * n + c) + " fields, got " +
                                 std::to_string(fields.size()),
                             ln + 1);
        }
        for (std::size_t i = 0; i < n; ++i) inputs.push_back(parse_double(fields[1 + n + i], ln + 1));
        for (std::size_t i = 0; i < c; ++i) targets.push_back(parse_double(fields[1 + 2 * n + i], ln + 1));
        ++rows;
    }
    Shape in_shape = shape;
    in_shape.insert(in_shape.begin(), rows);
    Shape t_shape = c == 1 ? Shape{rows} : Shape{rows, c};
    return {Tensor(std::move(in_shape), std::move(inputs)), Tensor(std::move(t_shape), std::move(targets)), {}};
}

json attack_spec_to_json(const AttackSpec& spec) {
    json j{{"epsilon", spec.epsilon},
           {"gamma", spec.gamma},
           {"kernel", std::string(to_string(spec.kernel))},
           {"rank", spec.rank == RankBy::absolute ? "absolute" : "signed"},
           {"mask", spec.mask ? json(*spec.mask) : json(nullptr)},
           {"clipped", spec.clip.has_value()}};
    return j;
}

json adversarial_summary(const AdversarialSet& set) {
    double linf = 0.0, mean_modified = 0.0, mean_gain = 0.0;
    std::size_t max_modified = 0;
    for (const auto& r : set.records) {
        std::size_t modified = 0;
        for (std::size_t i = 0; i < r.original.size(); ++i) {
            const double d = std::abs(r.adversarial[i] - r.original[i]);
            linf = std::max(linf, d);
            if (r.adversarial[i] != r.original[i]) ++modified;
        }
        mean_modified += static_cast<double>(modified);
        max_modified = std::max(max_modified, modified);
        mean_gain += r.loss_after - r.loss_before;
    }
    const double count = set.records.empty() ? 1.0 : static_cast<double>(set.records.size());
    return {{"spec", attack_spec_to_json(set.spec)},
            {"surrogate_fingerprint", set.surrogate_fingerprint},
            {"samples", set.records.size()},
            {"max_abs_delta", linf},
            {"mean_modified_entries", mean_modified / count},
            {"max_modified_entries", max_modified},
            {"mean_surrogate_loss_increase", mean_gain / count}};
}

}  // namespace gridadv
