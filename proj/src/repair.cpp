#include "fire/repair.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

std::string repair_mode_name(RepairMode m) { return m == RepairMode::Subtract ? "subtract" : "project"; }

RepairMode repair_mode_from_name(const std::string& name) {
    if (name == "subtract") return RepairMode::Subtract;
    if (name == "project") return RepairMode::Project;
    throw ParamError("unknown repair mode: " + name);
}

std::string stream_variant_name(StreamVariant v) {
    switch (v) {
        case StreamVariant::Combined: return "combined";
        case StreamVariant::AugmentOnly: return "augment_only";
        case StreamVariant::NoAugment: return "no_augment";
    }
    return "?";
}

StreamVariant stream_variant_from_name(const std::string& name) {
    if (name == "combined") return StreamVariant::Combined;
    if (name == "augment_only") return StreamVariant::AugmentOnly;
    if (name == "no_augment") return StreamVariant::NoAugment;
    throw ParamError("unknown stream variant: " + name);
}

void validate_repair_config(const RepairConfig& cfg, const LayeredModel& model) {
    if (cfg.lambda < 0.0 || cfg.lambda > 1.0) throw ParamError("lambda must be in [0,1]");
    if (cfg.taps.empty()) throw ParamError("repair config needs at least one tap");
    int prev = -1;
    for (int tap : cfg.taps) {
        if (tap <= prev) throw TapError("repair taps must be strictly increasing");
        if (!model.has_tap(tap)) throw TapError("tap " + std::to_string(tap) + " is not a model tap");
        prev = tap;
    }
}

Tensor repair_subtract(const Tensor& latent, const Tensor& direction, double alpha) {
    if (!same_shape(latent, direction))
        throw ShapeError("repair_subtract: latent " + shape_str(latent.shape) + " vs direction " +
                         shape_str(direction.shape));
    Tensor out = latent;
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = static_cast<float>(latent.data[i] - alpha * direction.data[i]);
    return out;
}

Tensor repair_project(const Tensor& latent, const Tensor& direction, const Tensor& clean_centroid, double epsilon) {
    if (!same_shape(latent, direction) || !same_shape(latent, clean_centroid))
        throw ShapeError("repair_project: shape mismatch");
    const double nrm2 = dot(direction, direction);
    if (nrm2 <= epsilon * epsilon) throw DegenerateDirectionError("direction norm below epsilon");
    double coef = 0.0;
    for (std::size_t i = 0; i < latent.numel(); ++i)
        coef += (static_cast<double>(latent.data[i]) - clean_centroid.data[i]) * direction.data[i];
    coef /= nrm2;
    Tensor out = latent;
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = static_cast<float>(latent.data[i] - coef * direction.data[i]);
    return out;
}

PredictionOutcome repaired_predict(const LayeredModel& model, const Tensor& x, int tap, const Tensor& direction,
                                   const RepairConfig& cfg, const Tensor* clean_centroid) {
    const Tensor latent = forward_to(model, x, tap);
    Tensor repaired;
    if (cfg.mode == RepairMode::Subtract) {
        repaired = repair_subtract(latent, direction, cfg.alpha);
    } else {
        if (!clean_centroid) throw StateError("projection repair needs a clean centroid");
        repaired = repair_project(latent, direction, *clean_centroid);
    }
    return forward_from(model, repaired, tap);
}

namespace {

Tensor direction_for_variant(const DirectionState& state, int tap, const RepairConfig& cfg) {
    switch (cfg.variant) {
        case StreamVariant::Combined:
            return combine_directions(centroid_diff_direction(state, tap),
                                      estimate_direction_augmentation(state, tap), cfg.lambda);
        case StreamVariant::AugmentOnly:
            return estimate_direction_augmentation(state, tap);
        case StreamVariant::NoAugment:
            return centroid_diff_direction(state, tap);
    }
    throw StateError("unreachable variant");
}

}  // namespace

RepairOutcome mitigate_one(const LayeredModel& model, DirectionState& state, const Tensor& x, const RepairConfig& cfg,
                           const AugmentChain& aug, std::uint64_t aug_seed, std::vector<TapTrace>* trace) {
    const bool needs_aug = cfg.variant != StreamVariant::NoAugment;
    const bool needs_clean = cfg.variant != StreamVariant::AugmentOnly;

    const ForwardTrace plain = forward_with_taps(model, x, cfg.taps);
    ForwardTrace augmented;
    if (needs_aug) {
        const Tensor x_aug = apply_chain(aug, x, aug_seed);
        augmented = forward_with_taps(model, x_aug, cfg.taps);
    }

    RepairOutcome outcome;
    outcome.unmitigated_label = plain.label;
    outcome.final_label = plain.label;

    for (std::size_t k = 0; k < cfg.taps.size(); ++k) {
        const int tap = cfg.taps[k];
        if (needs_clean && !state.stats[state.tap_slot(tap)].clean_initialized)
            throw StateError("clean centroid not initialized at tap " + std::to_string(tap));

        increment_count(state, tap);
        update_centroid(state, tap, CentroidKind::Pois, plain.latents[k]);
        if (needs_aug) update_centroid(state, tap, CentroidKind::PoisAug, augmented.latents[k]);

        const Tensor direction = direction_for_variant(state, tap, cfg);
        const int slot = state.tap_slot(tap);
        state.stats[slot].direction = direction;

        Tensor repaired;
        if (cfg.mode == RepairMode::Subtract) {
            repaired = repair_subtract(plain.latents[k], direction, cfg.alpha);
        } else {
            const Tensor mu = centroid_as_tensor(state.stats[slot].clean_centroid, state.latent_shapes[slot]);
            try {
                repaired = repair_project(plain.latents[k], direction, mu);
            } catch (const DegenerateDirectionError&) {
                repaired = plain.latents[k];  // zero-direction early stream: leave the latent alone
            }
        }

        const PredictionOutcome pred = forward_from(model, repaired, tap);
        outcome.per_tap_labels.push_back(pred.label);
        if (trace) trace->push_back({tap, repaired, pred.label});

        if (pred.label != plain.label) {
            outcome.final_label = pred.label;
            outcome.exit_tap = tap;
            break;
        }
    }
    return outcome;
}

namespace {

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double idx = p * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

StreamReport run_stream(const LayeredModel& model, DirectionState& state, const std::vector<StreamEntry>& stream,
                        const RepairConfig& cfg, const AugmentChain& aug, std::uint64_t stream_aug_seed,
                        int target_label) {
    validate_repair_config(cfg, model);
    StreamReport report;
    report.target_label = target_label;
    report.records.reserve(stream.size());

    std::vector<double> latencies;
    latencies.reserve(stream.size());

    for (std::size_t i = 0; i < stream.size(); ++i) {
        StreamRecord rec;
        rec.index = static_cast<int>(i);
        rec.true_label = stream[i].true_label;
        rec.poisoned = stream[i].poisoned;

        const std::uint64_t aug_seed = derive_seed(stream_aug_seed, i);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const RepairOutcome out = mitigate_one(model, state, stream[i].x, cfg, aug, aug_seed);
            rec.unmitigated = out.unmitigated_label;
            rec.final_label = out.final_label;
            rec.exit_tap = out.exit_tap;
            rec.per_tap_labels = out.per_tap_labels;
        } catch (const ShapeError& e) {
            rec.failed = true;
            rec.error = e.what();
        }
        const auto t1 = std::chrono::steady_clock::now();
        rec.latency_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
        if (!rec.failed) latencies.push_back(rec.latency_us);
        report.records.push_back(std::move(rec));
    }

    report.timing.online_median_us = percentile(latencies, 0.5);
    report.timing.online_p95_us = percentile(latencies, 0.95);

    // aggregates
    std::size_t clean_n = 0, clean_ok = 0, pois_n = 0, pois_ok = 0, asr_n = 0, asr_hit = 0;
    report.pa_curve.reserve(report.records.size());
    for (const auto& rec : report.records) {
        const bool correct = !rec.failed && rec.final_label == rec.true_label;
        report.pa_curve.push_back(correct ? 1.0 : 0.0);
        if (rec.failed) continue;
        if (rec.poisoned) {
            ++pois_n;
            if (correct) ++pois_ok;
            if (rec.true_label != target_label) {
                ++asr_n;
                if (rec.final_label == target_label) ++asr_hit;
            }
        } else {
            ++clean_n;
            if (correct) ++clean_ok;
        }
    }
    report.poisoned_accuracy = pois_n ? static_cast<double>(pois_ok) / pois_n : 0.0;
    report.clean_accuracy = clean_n ? static_cast<double>(clean_ok) / clean_n : 0.0;
    report.attack_success_rate = asr_n ? static_cast<double>(asr_hit) / asr_n : 0.0;
    return report;
}

int select_best_tap(const std::vector<SweepRow>& rows) {
    int best = -1;
    double best_pa = -1.0;
    for (const auto& row : rows) {
        if (row.poisoned_accuracy > best_pa) {
            best_pa = row.poisoned_accuracy;
            best = row.tap;
        }
    }
    return best;
}

SweepResult layer_sweep(const LayeredModel& model, const std::vector<PairedSample>& pairs,
                        const std::vector<int>& taps, const RepairConfig& cfg, int direction_pairs) {
    if (pairs.empty()) throw ParamError("layer_sweep: empty evaluation set");
    if (direction_pairs < 1) throw ParamError("layer_sweep: need at least one direction pair");

    std::vector<PairedSample> dir_pairs(
        pairs.begin(), pairs.begin() + std::min<std::size_t>(pairs.size(), static_cast<std::size_t>(direction_pairs)));

    SweepResult result;
    for (int tap : taps) {
        const Tensor direction = estimate_direction_paired(model, dir_pairs, tap);
        Tensor mu;
        if (cfg.mode == RepairMode::Project) {
            std::vector<Tensor> clean_imgs;
            clean_imgs.reserve(dir_pairs.size());
            for (const auto& p : dir_pairs) clean_imgs.push_back(p.clean);
            mu = clean_centroid(model, clean_imgs, tap);
        }

        std::size_t ok = 0;
        for (const auto& p : pairs) {
            const PredictionOutcome pred =
                repaired_predict(model, p.pois, tap, direction, cfg, cfg.mode == RepairMode::Project ? &mu : nullptr);
            if (pred.label == p.label) ++ok;
        }
        const double pa = static_cast<double>(ok) / static_cast<double>(pairs.size());
        result.rows.push_back({tap, pa});
    }
    result.best_tap = select_best_tap(result.rows);
    return result;
}

}  // namespace fire
