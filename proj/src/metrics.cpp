#include "fire/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

Metrics compute_metrics(const LayeredModel& model, const Dataset& clean_test, const Dataset& poisoned_test,
                        int target_label) {
    if (clean_test.size() == 0 || poisoned_test.size() == 0) throw ParamError("compute_metrics: empty evaluation set");
    Metrics m;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < clean_test.size(); ++i)
        if (forward(model, clean_test.images[i]).label == clean_test.labels[i]) ++ok;
    m.clean_accuracy = static_cast<double>(ok) / clean_test.size();

    std::size_t pois_ok = 0, asr_n = 0, asr_hit = 0;
    for (std::size_t i = 0; i < poisoned_test.size(); ++i) {
        const int pred = forward(model, poisoned_test.images[i]).label;
        if (pred == poisoned_test.labels[i]) ++pois_ok;
        if (poisoned_test.labels[i] != target_label) {
            ++asr_n;
            if (pred == target_label) ++asr_hit;
        }
    }
    m.poisoned_accuracy = static_cast<double>(pois_ok) / poisoned_test.size();
    m.attack_success_rate = asr_n ? static_cast<double>(asr_hit) / asr_n : 0.0;
    return m;
}

Metrics compute_metrics(const StreamReport& report) {
    if (report.records.empty()) throw ParamError("compute_metrics: empty stream report");
    Metrics m;
    std::size_t clean_n = 0, clean_ok = 0, pois_n = 0, pois_ok = 0, asr_n = 0, asr_hit = 0;
    m.pa_curve.reserve(report.records.size());
    for (const auto& rec : report.records) {
        const bool correct = !rec.failed && rec.final_label == rec.true_label;
        m.pa_curve.push_back(correct ? 1.0 : 0.0);
        if (rec.failed) continue;
        if (rec.poisoned) {
            ++pois_n;
            if (correct) ++pois_ok;
            if (rec.true_label != report.target_label) {
                ++asr_n;
                if (rec.final_label == report.target_label) ++asr_hit;
            }
        } else {
            ++clean_n;
            if (correct) ++clean_ok;
        }
    }
    m.poisoned_accuracy = pois_n ? static_cast<double>(pois_ok) / pois_n : 0.0;
    m.clean_accuracy = clean_n ? static_cast<double>(clean_ok) / clean_n : 0.0;
    m.attack_success_rate = asr_n ? static_cast<double>(asr_hit) / asr_n : 0.0;
    return m;
}

double windowed_pa(const StreamReport& report, int lo, int hi) {
    std::size_t n = 0, ok = 0;
    for (const auto& rec : report.records) {
        const int pos = rec.index + 1;
        if (pos < lo || pos > hi || !rec.poisoned || rec.failed) continue;
        ++n;
        if (rec.final_label == rec.true_label) ++ok;
    }
    return n ? static_cast<double>(ok) / n : 0.0;
}

double windowed_pa(const std::vector<StreamReport>& reports, int lo, int hi) {
    double sum = 0.0;
    for (const auto& r : reports) sum += windowed_pa(r, lo, hi);
    return reports.empty() ? 0.0 : sum / static_cast<double>(reports.size());
}

std::vector<StreamEntry> make_stream(const std::vector<StreamEntry>& poisoned_pool,
                                     const std::vector<StreamEntry>& clean_pool, const DetectorSpec& spec,
                                     int length) {
    if (spec.poison_fraction < 0.0 || spec.poison_fraction > 1.0) throw ParamError("poison_fraction must be in [0,1]");
    if (length < 0) throw ParamError("stream length must be >= 0");

    const int n_pois = static_cast<int>(std::llround(spec.poison_fraction * length));
    const int n_clean = length - n_pois;
    if (static_cast<std::size_t>(n_pois) > poisoned_pool.size())
        throw ParamError("poisoned pool too small: need " + std::to_string(n_pois) + ", have " +
                         std::to_string(poisoned_pool.size()));
    if (static_cast<std::size_t>(n_clean) > clean_pool.size())
        throw ParamError("clean pool too small: need " + std::to_string(n_clean) + ", have " +
                         std::to_string(clean_pool.size()));

    Rng rng(derive_seed(spec.seed, "stream-mix"));

    auto pick = [&rng](const std::vector<StreamEntry>& pool, int count) {
        std::vector<int> idx(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) idx[i] = static_cast<int>(i);
        rng.shuffle(idx);
        std::vector<StreamEntry> out;
        out.reserve(count);
        for (int i = 0; i < count; ++i) out.push_back(pool[idx[i]]);
        return out;
    };
    std::vector<StreamEntry> pois = pick(poisoned_pool, n_pois);
    std::vector<StreamEntry> clean = pick(clean_pool, n_clean);
    for (auto& e : pois) e.poisoned = true;
    for (auto& e : clean) e.poisoned = false;

    std::vector<int> slots(length);
    for (int i = 0; i < length; ++i) slots[i] = i < n_pois ? 1 : 0;
    rng.shuffle(slots);

    std::vector<StreamEntry> stream;
    stream.reserve(length);
    std::size_t pi = 0, ci = 0;
    for (int s : slots) stream.push_back(s ? std::move(pois[pi++]) : std::move(clean[ci++]));
    return stream;
}

std::vector<AblationPoint> clean_count_ablation(const AblationSetup& setup, const std::vector<int>& clean_counts) {
    if (!setup.model) throw ParamError("clean_count_ablation: no model");
    if (setup.position < 1) throw ParamError("clean_count_ablation: position must be >= 1");
    for (int n : clean_counts) {
        if (n < 1) throw ParamError("clean_count_ablation: clean counts must be >= 1");
        if (static_cast<std::size_t>(n) > setup.clean_pool.size())
            throw ParamError("clean_count_ablation: clean count " + std::to_string(n) + " exceeds pool of " +
                             std::to_string(setup.clean_pool.size()));
    }

    std::vector<AblationPoint> points;
    for (int n_clean : clean_counts) {
        const std::vector<Tensor> init_set(setup.clean_pool.begin(), setup.clean_pool.begin() + n_clean);
        double hits = 0.0;
        for (int s = 0; s < setup.num_seeds; ++s) {
            const std::uint64_t run_seed = derive_seed(setup.seed, static_cast<std::uint64_t>(s));
            DetectorSpec det{1.0, run_seed};
            const auto stream = make_stream(setup.poisoned_pool, {}, det, setup.position);

            DirectionState state = make_direction_state(*setup.model, setup.repair.taps);
            if (setup.repair.variant != StreamVariant::AugmentOnly)
                init_clean_centroids(state, *setup.model, init_set);
            const StreamReport report = run_stream(*setup.model, state, stream, setup.repair, setup.augment,
                                                   derive_seed(run_seed, "aug"), setup.target_label);
            const auto& rec = report.records[setup.position - 1];
            if (!rec.failed && rec.final_label == rec.true_label) hits += 1.0;
        }
        points.push_back({n_clean, hits / static_cast<double>(setup.num_seeds)});
    }
    return points;
}

BenchResult bench_latency(const LayeredModel& model, const RepairConfig& cfg, const AugmentChain& aug,
                          const std::vector<Tensor>& clean_init, const std::vector<StreamEntry>& stream,
                          std::uint64_t stream_aug_seed, int target_label, int warmup) {
    using clock = std::chrono::steady_clock;
    BenchResult result;

    DirectionState state = make_direction_state(model, cfg.taps);
    const auto init0 = clock::now();
    if (cfg.variant != StreamVariant::AugmentOnly) init_clean_centroids(state, model, clean_init);
    result.init_us = std::chrono::duration<double, std::micro>(clock::now() - init0).count();

    const StreamReport report = run_stream(model, state, stream, cfg, aug, stream_aug_seed, target_label);

    std::vector<double> online;
    for (const auto& rec : report.records)
        if (!rec.failed && rec.index >= warmup) online.push_back(rec.latency_us);
    std::sort(online.begin(), online.end());
    auto pct = [&online](double p) {
        if (online.empty()) return 0.0;
        const double idx = p * (static_cast<double>(online.size()) - 1.0);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, online.size() - 1);
        return online[lo] * (1.0 - (idx - lo)) + online[hi] * (idx - lo);
    };
    result.online_median_us = pct(0.5);
    result.online_p95_us = pct(0.95);
    result.samples = static_cast<int>(online.size());

    // plain forward baseline over the same inputs
    std::vector<double> fwd;
    for (const auto& e : stream) {
        const auto t0 = clock::now();
        (void)forward(model, e.x);
        fwd.push_back(std::chrono::duration<double, std::micro>(clock::now() - t0).count());
    }
    std::sort(fwd.begin(), fwd.end());
    result.forward_median_us = fwd.empty() ? 0.0 : fwd[fwd.size() / 2];
    return result;
}

}  // namespace fire
