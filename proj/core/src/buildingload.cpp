#include "gridadv/buildingload.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "gridadv/csv.hpp"
#include "gridadv/error.hpp"
#include "gridadv/random.hpp"

namespace gridadv::building {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double hour_of(const BuildingParams& p, std::size_t step) {
    return 24.0 * static_cast<double>(step % p.steps_per_day) /
           static_cast<double>(p.steps_per_day);
}

bool is_weekday(const BuildingParams& p, std::size_t step) {
    return (step / p.steps_per_day) % 7 < 5;
}

// Piecewise-linear day shape: 0 before 06:00, up to 1 by 09:00, flat to
// 17:00, back to 0 by 20:00.
double day_shape(double hour) {
    if (hour < 6.0 || hour >= 20.0) return 0.0;
    if (hour < 9.0) return (hour - 6.0) / 3.0;
    if (hour < 17.0) return 1.0;
    return (20.0 - hour) / 3.0;
}

}  // namespace

void validate(const BuildingParams& p) {
    if (p.steps == 0 || p.steps_per_day == 0) throw ConfigError("building steps must be positive");
    if (p.zones == 0) throw ConfigError("building needs at least one zone");
    if (p.occupancy_peak < 0.0 || p.occupancy_peak > 1.0 || p.weekend_peak < 0.0 ||
        p.weekend_peak > 1.0 || p.occupancy_floor < 0.0 || p.occupancy_floor > 1.0) {
        throw ConfigError("occupancy levels must lie in [0, 1]");
    }
    for (double corr : {p.temp_noise_corr, p.occupancy_noise_corr}) {
        if (!(corr >= 0.0 && corr < 1.0)) throw ConfigError("AR(1) coefficients must lie in [0, 1)");
    }
    if (p.base_load_kw <= 0.0) throw ConfigError("base load must be positive");
    if (p.temp_noise_c < 0.0 || p.occupancy_noise < 0.0 || p.load_noise_kw < 0.0) {
        throw ConfigError("noise levels must be >= 0");
    }
}

std::vector<std::string> feature_names(const BuildingParams& p) {
    std::vector<std::string> names{"outdoor_temp_c", "solar", "occupancy"};
    for (std::size_t z = 0; z < p.zones; ++z) names.push_back("setpoint_z" + std::to_string(z) + "_c");
    names.emplace_back("hour_sin");
    names.emplace_back("hour_cos");
    return names;
}

std::size_t occupancy_column() { return 2; }

std::vector<std::size_t> setpoint_columns(const BuildingParams& p) {
    std::vector<std::size_t> cols(p.zones);
    for (std::size_t z = 0; z < p.zones; ++z) cols[z] = 3 + z;
    return cols;
}

double scheduled_occupancy(const BuildingParams& p, std::size_t step) {
    const double peak = is_weekday(p, step) ? p.occupancy_peak : p.weekend_peak;
    const double shape = day_shape(hour_of(p, step));
    return p.occupancy_floor + shape * std::max(0.0, peak - p.occupancy_floor);
}

BuildingTable simulate_year(const BuildingParams& p, std::uint64_t seed) {
    validate(p);
    const std::size_t n = p.steps;
    const std::size_t f = p.feature_count();
    const RandomSource root(seed);
    RandomSource zone_rng = root.child("zones");
    RandomSource weather_rng = root.child("weather");
    RandomSource occupancy_rng = root.child("occupancy");
    RandomSource load_rng = root.child("load");

    std::vector<double> zone_offset(p.zones);
    for (double& z : zone_offset) z = zone_rng.uniform(-p.zone_offset_c, p.zone_offset_c);

    BuildingTable table{Tensor({n, f}), std::vector<double>(n), feature_names(p)};
    const double steps_per_year = 365.0 * static_cast<double>(p.steps_per_day);
    const double temp_innov = p.temp_noise_c * std::sqrt(1.0 - p.temp_noise_corr * p.temp_noise_corr);
    const double occ_innov =
        p.occupancy_noise * std::sqrt(1.0 - p.occupancy_noise_corr * p.occupancy_noise_corr);
    double temp_noise = weather_rng.normal(0.0, p.temp_noise_c);
    double occ_noise = occupancy_rng.normal(0.0, p.occupancy_noise);
    double cloud = 1.0;

    for (std::size_t t = 0; t < n; ++t) {
        const double hour = hour_of(p, t);
        const double year_phase = kTwoPi * static_cast<double>(t) / steps_per_year;
        const double day_phase = kTwoPi * hour / 24.0;
        if (t % p.steps_per_day == 0) cloud = weather_rng.uniform(0.4, 1.0);

        // Coldest around mid-January, warmest mid-afternoon.
        const double temp = p.annual_mean_c - p.annual_swing_c * std::cos(year_phase - 0.27) -
                            p.diurnal_swing_c * std::cos(day_phase - kTwoPi * 3.0 / 24.0) +
                            temp_noise;
        temp_noise = p.temp_noise_corr * temp_noise + weather_rng.normal(0.0, temp_innov);

        const double daylight = std::max(0.0, std::sin(kTwoPi * (hour - 6.0) / 24.0));
        const double season = 0.7 - 0.3 * std::cos(year_phase - 0.27);
        const double solar = std::clamp(daylight * season * cloud, 0.0, 1.0);

        const double occ = std::clamp(scheduled_occupancy(p, t) + occ_noise, 0.0, 1.0);
        occ_noise = p.occupancy_noise_corr * occ_noise + occupancy_rng.normal(0.0, occ_innov);

        const bool occupied = is_weekday(p, t) && hour >= 6.0 && hour < 20.0;
        const double setpoint = occupied ? p.setpoint_occupied_c : p.setpoint_unoccupied_c;

        auto row = table.features.row(t);
        row[0] = temp;
        row[1] = solar;
        row[2] = occ;
        double mean_setpoint = 0.0;
        for (std::size_t z = 0; z < p.zones; ++z) {
            row[3 + z] = setpoint + zone_offset[z];
            mean_setpoint += row[3 + z];
        }
        mean_setpoint /= static_cast<double>(p.zones);
        row[3 + p.zones] = std::sin(day_phase);
        row[4 + p.zones] = std::cos(day_phase);

        const double load = p.base_load_kw +
                            p.hvac_gain_kw_per_c * std::abs(temp - mean_setpoint) * (occ + 0.2) +
                            p.plug_gain_kw * occ + load_rng.normal(0.0, p.load_noise_kw);
        table.load[t] = std::max(load, 1.0);
    }
    return table;
}

Dataset SequenceDataset::normalized() const {
    return {normalize_windows(windows, norm), normalize_targets(targets, norm), {}};
}

Normalization fit_normalization(const Tensor& windows, const Tensor& targets) {
    const std::size_t f = windows.shape().back();
    Normalization norm;
    norm.features.assign(f, MinMax{std::numeric_limits<double>::infinity(),
                                   -std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < windows.size(); ++i) {
        MinMax& m = norm.features[i % f];
        m.lo = std::min(m.lo, windows[i]);
        m.hi = std::max(m.hi, windows[i]);
    }
    norm.target = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (double v : targets.data()) {
        norm.target.lo = std::min(norm.target.lo, v);
        norm.target.hi = std::max(norm.target.hi, v);
    }
    return norm;
}

SequenceDataset make_windows(const BuildingTable& table, std::size_t steps,
                             bool fit_normalization_flag) {
    const std::size_t n = table.features.dim(0);
    const std::size_t f = table.features.dim(1);
    if (steps == 0) throw ConfigError("window length must be at least 1");
    if (n <= steps) {
        throw ConfigError("need more than " + std::to_string(steps) + " steps to window, got " +
                          std::to_string(n));
    }
    const std::size_t count = n - steps;
    SequenceDataset ds;
    ds.steps = steps;
    ds.windows = Tensor({count, steps, f});
    ds.targets = Tensor({count});
    ds.window_start.resize(count);
    const std::size_t window_size = steps * f;
    for (std::size_t i = 0; i < count; ++i) {
        const auto src = table.features.data().subspan(i * f, window_size);
        std::copy(src.begin(), src.end(), ds.windows.row(i).begin());
        ds.targets[i] = table.load[i + steps];
        ds.window_start[i] = i;
    }
    if (fit_normalization_flag) {
        ds.norm = fit_normalization(ds.windows, ds.targets);
    } else {
        ds.norm.features.assign(f, MinMax{0.0, 1.0});
        ds.norm.target = MinMax{0.0, 1.0};
    }
    return ds;
}

std::pair<SequenceDataset, SequenceDataset> holdout_split(const SequenceDataset& ds,
                                                          double test_fraction,
                                                          std::uint64_t seed) {
    RandomSource rng(seed);
    const auto [train_idx, test_idx] = split_indices(ds.size(), test_fraction, rng);
    auto pick = [&](const std::vector<std::size_t>& idx) {
        SequenceDataset out;
        out.steps = ds.steps;
        out.windows = take_rows(ds.windows, idx);
        out.targets = take_rows(ds.targets, idx);
        out.window_start.reserve(idx.size());
        for (std::size_t i : idx) out.window_start.push_back(ds.window_start[i]);
        return out;
    };
    SequenceDataset train = pick(train_idx);
    SequenceDataset test = pick(test_idx);
    train.norm = fit_normalization(train.windows, train.targets);
    test.norm = train.norm;
    return {std::move(train), std::move(test)};
}

Tensor normalize_windows(const Tensor& windows, const Normalization& norm) {
    const std::size_t f = norm.features.size();
    if (windows.shape().back() != f) throw ShapeError("normalization feature count mismatch");
    Tensor out = windows;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = norm.features[i % f].normalize(out[i]);
    return out;
}

Tensor denormalize_windows(const Tensor& windows, const Normalization& norm) {
    const std::size_t f = norm.features.size();
    if (windows.shape().back() != f) throw ShapeError("normalization feature count mismatch");
    Tensor out = windows;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = norm.features[i % f].denormalize(out[i]);
    return out;
}

Tensor normalize_targets(const Tensor& targets, const Normalization& norm) {
    Tensor out = targets;
    for (double& v : out.data()) v = norm.target.normalize(v);
    return out;
}

Tensor denormalize_targets(const Tensor& targets, const Normalization& norm) {
    Tensor out = targets;
    for (double& v : out.data()) v = norm.target.denormalize(v);
    return out;
}

std::vector<std::size_t> window_mask(const std::vector<std::size_t>& columns, std::size_t steps,
                                     std::size_t features) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t c : columns) {
            if (c >= features) throw ConfigError("mask column " + std::to_string(c) + " out of range");
            out.push_back(t * features + c);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void write_csv(std::ostream& out, const BuildingTable& table) {
    const std::size_t f = table.features.dim(1);
    out << "# gridadv-building v1 F=" << f << " features=";
    for (std::size_t i = 0; i < table.names.size(); ++i) out << (i ? "," : "") << table.names[i];
    out << "\nstep";
    for (std::size_t i = 0; i < f; ++i) out << ",feat_" << i;
    out << ",load\n";
    for (std::size_t t = 0; t < table.load.size(); ++t) {
        out << t;
        for (double v : table.features.row(t)) out << ',' << format_double(v);
        out << ',' << format_double(table.load[t]) << '\n';
    }
}

BuildingTable read_csv(std::string_view text) {
    const auto lines = split(text, '\n');
    constexpr std::string_view prefix = "# gridadv-building v1 F=";
    if (lines.empty() || !trim(lines[0]).starts_with(prefix)) {
        throw ParseError("expected header '" + std::string(prefix) + "<F> features=...'", 1);
    }
    const auto header = trim(lines[0]).substr(prefix.size());
    const auto space = header.find(" features=");
    if (space == std::string_view::npos) throw ParseError("header lacks features=", 1);
    const std::size_t f = parse_size(header.substr(0, space), 1);
    BuildingTable table;
    for (auto name : split(header.substr(space + 10), ',')) table.names.emplace_back(name);
    if (table.names.size() != f) throw ParseError("feature name count differs from F", 1);
    if (lines.size() < 2 || !trim(lines[1]).starts_with("step,")) {
        throw ParseError("expected column header line", 2);
    }
    std::vector<double> feats;
    for (std::size_t ln = 2; ln < lines.size(); ++ln) {
        const auto line = trim(lines[ln]);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != f + 2) {
            throw ParseError("expected " + std::to_string(f + 2) + " fields, got " +
                                 std::to_string(fields.size()),
                             ln + 1);
        }
        if (parse_size(fields[0], ln + 1) != table.load.size()) {
            throw ParseError("steps must be consecutive from 0", ln + 1);
        }
        for (std::size_t i = 0; i < f; ++i) feats.push_back(parse_double(fields[1 + i], ln + 1));
        table.load.push_back(parse_double(fields[f + 1], ln + 1));
    }
    if (table.load.empty()) throw ParseError("building table has no rows", lines.size());
    table.features = Tensor({table.load.size(), f}, std::move(feats));
    return table;
}

}  // namespace gridadv::building
