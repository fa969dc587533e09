#include "fire/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

namespace {

void append_split_payload(const Dataset& d, std::vector<float>& images, std::vector<std::uint16_t>& labels) {
    for (const auto& img : d.images) images.insert(images.end(), img.data.begin(), img.data.end());
    labels.insert(labels.end(), d.labels.begin(), d.labels.end());
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::uint64_t dataset_digest(const DataBundle& bundle) {
    std::vector<float> images;
    std::vector<std::uint16_t> labels;
    append_split_payload(bundle.train, images, labels);
    append_split_payload(bundle.test, images, labels);
    std::uint64_t h = fnv1a64(images.data(), images.size() * sizeof(float));
    return fnv1a64(labels.data(), labels.size() * sizeof(std::uint16_t), h);
}

void save_dataset(const DataBundle& bundle, const std::string& path) {
    nlohmann::json index{{"width", bundle.train.width},
                         {"height", bundle.train.height},
                         {"channels", bundle.train.channels},
                         {"classes", bundle.train.num_classes},
                         {"train_count", bundle.train.size()},
                         {"test_count", bundle.test.size()}};
    const std::string meta = index.dump();

    std::vector<float> images;
    std::vector<std::uint16_t> labels;
    append_split_payload(bundle.train, images, labels);
    append_split_payload(bundle.test, images, labels);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open dataset file for writing: " + path);
    write_u32_le(os, static_cast<std::uint32_t>(meta.size()));
    os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    os.write(reinterpret_cast<const char*>(images.data()), static_cast<std::streamsize>(images.size() * sizeof(float)));
    os.write(reinterpret_cast<const char*>(labels.data()),
             static_cast<std::streamsize>(labels.size() * sizeof(std::uint16_t)));
    if (!os) throw IoError("short write to dataset file: " + path);
}

DataBundle load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open dataset file: " + path);
    const std::uint32_t meta_len = read_u32_le(is);
    std::string meta(meta_len, '\0');
    is.read(meta.data(), meta_len);
    if (!is) throw IoError("truncated dataset index: " + path);

    nlohmann::json index;
    try {
        index = nlohmann::json::parse(meta);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad dataset index in " + path + ": " + e.what());
    }

    DataBundle bundle;
    const int w = index.at("width").get<int>();
    const int h = index.at("height").get<int>();
    const int c = index.at("channels").get<int>();
    const int classes = index.at("classes").get<int>();
    const std::size_t train_count = index.at("train_count").get<std::size_t>();
    const std::size_t test_count = index.at("test_count").get<std::size_t>();

    auto read_split = [&](Dataset& d, std::size_t count) {
        d.width = w;
        d.height = h;
        d.channels = c;
        d.num_classes = classes;
        d.images.reserve(count);
        const std::size_t pix = static_cast<std::size_t>(c) * h * w;
        std::vector<float> buf(pix);
        for (std::size_t i = 0; i < count; ++i) {
            is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pix * sizeof(float)));
            d.images.emplace_back(std::vector<int>{c, h, w}, buf);
        }
    };
    auto read_labels = [&](Dataset& d, std::size_t count) {
        d.labels.resize(count);
        is.read(reinterpret_cast<char*>(d.labels.data()),
                static_cast<std::streamsize>(count * sizeof(std::uint16_t)));
    };

    read_split(bundle.train, train_count);
    read_split(bundle.test, test_count);
    read_labels(bundle.train, train_count);
    read_labels(bundle.test, test_count);
    if (!is) throw IoError("truncated dataset payload: " + path);
    return bundle;
}

namespace {

// Class templates: a colored Gaussian blob at a class-specific position plus a
// class-specific sinusoidal grating, with per-sample jitter and pixel noise.
struct ClassTemplate {
    double cx, cy;
    double color[3];
    double fx, fy;
    double spread;
    double amp_scale;
    double tex_scale;
};

ClassTemplate class_template(int cls, int width, int height) {
    // class 0 is the diffuse central class whose template resembles the
    // population mean (broad blob, averaged color); the other classes sit on
    // a spread triangle with saturated colors
    static const double kCenters[8][2] = {
        {0.50, 0.50}, {0.28, 0.32}, {0.72, 0.32}, {0.50, 0.76},
        {0.28, 0.76}, {0.72, 0.76}, {0.30, 0.55}, {0.70, 0.55},
    };
    static const double kColors[8][3] = {
        {0.55, 0.60, 0.50}, {0.90, 0.35, 0.25}, {0.30, 0.55, 0.90}, {0.35, 0.85, 0.40},
        {0.85, 0.30, 0.85}, {0.30, 0.85, 0.85}, {0.90, 0.80, 0.25}, {0.60, 0.60, 0.60},
    };
    static const double kFreqs[8][2] = {
        {2.0, 0.0}, {0.0, 2.0}, {2.0, 2.0}, {3.0, 1.0}, {1.0, 3.0}, {3.0, 3.0}, {4.0, 0.0}, {0.0, 4.0},
    };
    ClassTemplate t{};
    const int k = cls % 8;
    t.spread = (k == 0) ? 0.35 : 0.20;
    t.amp_scale = (k == 0) ? 0.50 : 1.0;
    t.tex_scale = (k == 0) ? 0.75 : 1.0;
    t.cx = kCenters[k][0] * width;
    t.cy = kCenters[k][1] * height;
    t.color[0] = kColors[k][0];
    t.color[1] = kColors[k][1];
    t.color[2] = kColors[k][2];
    t.fx = kFreqs[k][0];
    t.fy = kFreqs[k][1];
    return t;
}

Tensor synth_image(const ClassTemplate& t, int channels, int height, int width, Rng& rng) {
    const double pi2 = 2.0 * 3.14159265358979323846;
    const double jx = rng.uniform(-2.5, 2.5);
    const double jy = rng.uniform(-2.5, 2.5);
    const double amp = t.amp_scale * rng.uniform(0.45, 1.00);
    const double phase = rng.uniform(0.0, pi2);
    const double tex_w = t.tex_scale * rng.uniform(0.06, 0.26);
    const double sigma = t.spread * width;

    // distractor blob with a random color at a random position
    const double ox = rng.uniform(0.15, 0.85) * width;
    const double oy = rng.uniform(0.15, 0.85) * height;
    const double oamp = rng.uniform(0.0, 0.45);
    double ocol[3] = {rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)};
    const double osigma = 0.14 * width;

    Tensor img = Tensor::zeros({channels, height, width});
    const double cyc = 0.5 * (height - 1), cxc = 0.5 * (width - 1);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = x - (t.cx + jx);
            const double dy = y - (t.cy + jy);
            const double blob = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            const double ddx = x - ox;
            const double ddy = y - oy;
            const double dist = std::exp(-(ddx * ddx + ddy * ddy) / (2.0 * osigma * osigma));
            const double grate = 0.5 + 0.5 * std::sin(pi2 * (t.fx * x + t.fy * y) / width + phase);
            // shared soft frame near the border, identical across all images
            const double rad = std::max(std::abs(y - cyc) / (0.5 * height), std::abs(x - cxc) / (0.5 * width));
            const double ring = std::exp(-((rad - 0.92) / 0.07) * ((rad - 0.92) / 0.07));
            for (int c = 0; c < channels; ++c) {
                const double col = t.color[c % 3];
                double v = 0.08 + amp * col * blob * 0.80 + oamp * ocol[c % 3] * dist + tex_w * grate + 0.32 * ring +
                           rng.normal(0.0, 0.085);
                img.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return img;
}

Dataset synth_split(const SynthConfig& cfg, int count, std::uint64_t seed) {
    Dataset d;
    d.width = cfg.width;
    d.height = cfg.height;
    d.channels = cfg.channels;
    d.num_classes = cfg.num_classes;
    Rng rng(seed);

    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i % cfg.num_classes;  // balanced classes
    rng.shuffle(order);

    d.images.reserve(count);
    d.labels.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int cls = order[i];
        const auto t = class_template(cls, cfg.width, cfg.height);
        d.images.push_back(synth_image(t, cfg.channels, cfg.height, cfg.width, rng));
        d.labels.push_back(static_cast<std::uint16_t>(cls));
    }
    return d;
}

}  // namespace

DataBundle make_synthetic_data(const SynthConfig& cfg) {
    if (cfg.width <= 0 || cfg.height <= 0 || cfg.channels <= 0 || cfg.num_classes <= 0)
        throw ParamError("make_synthetic_data: dimensions must be positive");
    DataBundle bundle;
    bundle.train = synth_split(cfg, cfg.train_count, derive_seed(cfg.seed, "synth-train"));
    bundle.test = synth_split(cfg, cfg.test_count, derive_seed(cfg.seed, "synth-test"));
    return bundle;
}

}  // namespace fire
