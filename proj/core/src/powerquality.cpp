#include "gridadv/powerquality.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "gridadv/csv.hpp"
#include "gridadv/error.hpp"

namespace gridadv::pq {

namespace {

void check_range(const Range& r, const char* name) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
        throw ConfigError(std::string("signal parameter range '") + name + "' has lo > hi");
    }
}

double draw(const Range& r, RandomSource& rng) { return rng.uniform(r.lo, r.hi); }

}  // namespace

void validate(const SignalParams& p) {
    if (p.length == 0 || p.cycle_length == 0) throw ConfigError("signal length must be positive");
    if (p.length % p.cycle_length != 0) {
        throw ConfigError("signal length " + std::to_string(p.length) +
                          " is not a multiple of the cycle length " +
                          std::to_string(p.cycle_length));
    }
    check_range(p.amplitude, "amplitude");
    check_range(p.phase, "phase");
    check_range(p.sag_depth, "sag_depth");
    check_range(p.sag_cycles, "sag_cycles");
    check_range(p.impulse_magnitude, "impulse_magnitude");
    check_range(p.harmonic_coefficient, "harmonic_coefficient");
    if (p.sag_depth.lo < 0.0 || p.sag_depth.hi >= 1.0) {
        throw ConfigError("sag depth must lie in [0, 1)");
    }
    if (p.sag_cycles.lo <= 0.0) throw ConfigError("sag duration must be positive");
    if (p.impulse_count_min > p.impulse_count_max || p.impulse_width_min > p.impulse_width_max ||
        p.impulse_width_min == 0) {
        throw ConfigError("impulse count/width ranges are invalid");
    }
    if (!(p.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
}

Tensor gen_signal(SignalClass cls, const SignalParams& params, RandomSource& rng) {
    validate(params);
    const std::size_t len = params.length;
    const double cycle = static_cast<double>(params.cycle_length);
    const double two_pi = 2.0 * std::numbers::pi;

    const double amp = draw(params.amplitude, rng);
    const double phase = draw(params.phase, rng);
    Tensor v({len});
    for (std::size_t n = 0; n < len; ++n) {
        v[n] = amp * std::sin(two_pi * static_cast<double>(n) / cycle + phase);
    }
    if (params.noise_sigma > 0.0) {
        for (std::size_t n = 0; n < len; ++n) v[n] += rng.normal(0.0, params.noise_sigma);
    }

    switch (cls) {
        case SignalClass::normal:
            break;
        case SignalClass::sag: {
            const double alpha = draw(params.sag_depth, rng);
            const auto width = static_cast<std::size_t>(
                std::lround(draw(params.sag_cycles, rng) * cycle));
            const std::size_t span = std::clamp<std::size_t>(width, 1, len);
            const auto start = static_cast<std::size_t>(rng.below(len - span + 1));
            for (std::size_t n = start; n < start + span; ++n) v[n] *= 1.0 - alpha;
            break;
        }
        case SignalClass::impulse: {
            const auto count = static_cast<std::size_t>(
                rng.between(static_cast<std::int64_t>(params.impulse_count_min),
                            static_cast<std::int64_t>(params.impulse_count_max)));
            for (std::size_t k = 0; k < count; ++k) {
                const double mag = draw(params.impulse_magnitude, rng);
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                const auto width = static_cast<std::size_t>(
                    rng.between(static_cast<std::int64_t>(params.impulse_width_min),
                                static_cast<std::int64_t>(params.impulse_width_max)));
                const std::size_t w = std::min(width, len);
                const auto pos = static_cast<std::size_t>(rng.below(len - w + 1));
                for (std::size_t n = pos; n < pos + w; ++n) v[n] += sign * mag;
            }
            break;
        }
        case SignalClass::distortion: {
            for (std::size_t h : params.harmonics) {
                const double c = draw(params.harmonic_coefficient, rng);
                const double phi = rng.uniform(0.0, two_pi);
                for (std::size_t n = 0; n < len; ++n) {
                    v[n] += amp * c *
                            std::sin(two_pi * static_cast<double>(h * n) / cycle + phi);
                }
            }
            break;
        }
    }
    return v;
}

Dataset gen_dataset(std::size_t n_per_class, const SignalParams& params, std::uint64_t seed) {
    validate(params);
    if (n_per_class == 0) throw ConfigError("need at least one signal per class");
    const std::size_t total = kClassCount * n_per_class;
    Dataset ds{Tensor({total, params.length}), Tensor({total, kClassCount}), {}};
    for (auto name : kClassNames) ds.label_names.emplace_back(name);
    const RandomSource root(seed);
    for (std::size_t c = 0; c < kClassCount; ++c) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t row = c * n_per_class + i;
            RandomSource rng = root.child(kClassNames[c], i);
            const Tensor sig = gen_signal(static_cast<SignalClass>(c), params, rng);
            std::copy(sig.data().begin(), sig.data().end(), ds.inputs.row(row).begin());
            ds.targets.at(row, c) = 1.0;
        }
    }
    return ds;
}

void write_csv(std::ostream& out, const Dataset& ds) {
    const auto labels = labels_of(ds);
    const std::size_t len = ds.inputs.dim(1);
    out << "# gridadv-pq v1 L=" << len << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << labels[i];
        for (double v : ds.inputs.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
}

Dataset read_csv(std::string_view text) {
    const auto lines = split(text, '\n');
    if (text.empty() || lines.empty() || trim(lines[0]).empty()) {
        throw ParseError("empty power-quality dataset file", 1);
    }
    const auto header = trim(lines[0]);
    constexpr std::string_view prefix = "# gridadv-pq v1 L=";
    if (!header.starts_with(prefix)) {
        throw ParseError("expected header '" + std::string(prefix) + "<length>'", 1);
    }
    const std::size_t len = parse_size(header.substr(prefix.size()), 1);
    if (len == 0) throw ParseError("signal length must be positive", 1);

    std::vector<double> inputs;
    std::vector<std::size_t> labels;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const auto line = trim(lines[ln]);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != len + 1) {
            throw ParseError("expected " + std::to_string(len + 1) + " fields, got " +
                                 std::to_string(fields.size()),
                             ln + 1);
        }
        const std::size_t label = parse_size(fields[0], ln + 1);
        if (label >= kClassCount) {
            throw ParseError("label index " + std::to_string(label) + " out of range", ln + 1);
        }
        labels.push_back(label);
        for (std::size_t i = 1; i <= len; ++i) inputs.push_back(parse_double(fields[i], ln + 1));
    }
    if (labels.empty()) throw ParseError("dataset file has no samples", lines.size());

    const std::size_t n = labels.size();
    Dataset ds{Tensor({n, len}, std::move(inputs)), Tensor({n, kClassCount}), {}};
    for (auto name : kClassNames) ds.label_names.emplace_back(name);
    for (std::size_t i = 0; i < n; ++i) ds.targets.at(i, labels[i]) = 1.0;
    return ds;
}

}  // namespace gridadv::pq
