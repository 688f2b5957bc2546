#include "forgecl/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "forgecl/errors.hpp"
#include "forgecl/rng.hpp"

namespace forgecl {

void TaskDataset::validate() const {
    if (n < 2) throw DataError("dataset '" + task_id + "' needs at least 2 samples");
    if (labels.size() != static_cast<std::size_t>(n) ||
        inputs.size() != static_cast<std::size_t>(n) * steps * channels)
        throw DataError("dataset '" + task_id + "' has inconsistent tensor sizes");
    bool has0 = false, has1 = false;
    for (std::uint8_t y : labels) {
        if (y == 0) has0 = true;
        else if (y == 1) has1 = true;
        else throw DataError("dataset '" + task_id + "' has a label outside {0,1}");
    }
    if (!has0 || !has1) throw DataError("dataset '" + task_id + "' must contain both classes");
    for (double v : inputs)
        if (!std::isfinite(v)) throw DataError("dataset '" + task_id + "' has non-finite input");
}

void PressGenConfig::validate() const {
    if (n_pumps < 2) throw ConfigError("press generator needs at least 2 pumps");
    if (window_len < 10) throw ConfigError("press window_len must be >= 10");
    if (samples_per_class < 1) throw ConfigError("samples_per_class must be >= 1");
    if (noise_std < 0.0) throw ConfigError("noise_std must be nonnegative");
    if (!(degradation_min > 0.0 && degradation_max < 1.0 && degradation_min <= degradation_max))
        throw ConfigError("degradation_range must lie inside (0,1)");
    if (product && !(product->hold_pressure > product->base_pressure))
        throw ConfigError("product hold_pressure must exceed base_pressure");
}

double nominal_cycle(const ProductParams& p, double t) {
    double phase = std::fmod(t, p.cycle_period) / p.cycle_period;
    if (phase < 0.0) phase += 1.0;
    const double r = p.ramp_frac, h = p.hold_frac;
    const double amp = p.hold_pressure - p.base_pressure;
    if (phase < r) return p.base_pressure + amp * (phase / r);
    if (phase < r + h) return p.hold_pressure;
    if (phase < 2.0 * r + h) return p.hold_pressure - amp * ((phase - r - h) / r);
    return p.base_pressure;
}

ProductParams draw_product_params(int window_len, std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, 0x9d));
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    ProductParams p;
    p.cycle_period = uni(window_len / 16.0, window_len / 1.2);
    p.ramp_frac = uni(0.05, 0.40);
    p.hold_frac = uni(0.05, 0.50);
    const double span = 2.0 * p.ramp_frac + p.hold_frac;
    if (span > 0.95) {
        p.ramp_frac *= 0.95 / span;
        p.hold_frac *= 0.95 / span;
    }
    // Products live at very different absolute pressure scales; the shared
    // anomaly signature therefore sits in per-product input statistics, which
    // is what gives sequential training something to forget.
    // light-press and heavy-press product families: the two clusters sit at
    // pressure scales far enough apart that a detector tuned on one family
    // needs a different threshold for the other
    const double family = uni(0.0, 1.0) < 0.5 ? 0.2 : 1.0;
    const double scale = family * uni(0.9, 1.1);
    p.base_pressure = scale * uni(1.0, 2.5);
    p.hold_pressure = p.base_pressure + scale * uni(5.0, 9.0);
    return p;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

TaskDataset generate_press_task(const PressGenConfig& cfg, std::uint64_t task_seed) {
    cfg.validate();
    const ProductParams product =
        cfg.product ? *cfg.product : draw_product_params(cfg.window_len, task_seed);

    const int T = cfg.window_len, C = cfg.n_pumps, spc = cfg.samples_per_class;
    TaskDataset ds;
    ds.task_id = "press-" + std::to_string(task_seed & 0xffff);
    ds.n = 2 * spc;
    ds.steps = T;
    ds.channels = C;
    ds.inputs.resize(static_cast<std::size_t>(ds.n) * T * C);
    ds.labels.resize(static_cast<std::size_t>(ds.n));

    Rng rng = make_rng(derive_seed(task_seed, 0xda7a));
    // one sensor-noise floor for every product: the decision threshold a
    // small-scale product needs conflicts with a large-scale product's
    const double noise_sd = cfg.noise_std;
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pump_pick(0, C - 1);

    std::uniform_real_distribution<double> degr(cfg.degradation_min, cfg.degradation_max);

    // each product line has one characteristic weak pump (chosen uniformly
    // per task); which sensor carries the anomaly is a property of the line
    const int weak_pump = pump_pick(rng);

    for (int s = 0; s < ds.n; ++s) {
        const bool anomalous = s >= spc;
        ds.labels[static_cast<std::size_t>(s)] = anomalous ? 1 : 0;
        const double phase_offset = product.phase;  // 0 unless a product pins it

        int bad_pump = -1;
        double factor = 1.0, step_onset = 0.0;
        if (anomalous) {
            bad_pump = weak_pump;
            factor = degr(rng);
            step_onset = (cfg.onset == AnomalyOnset::Step)
                             ? (0.2 + 0.3 * unit(rng)) * static_cast<double>(T)
                             : 0.0;
        }

        double* out = ds.inputs.data() + static_cast<std::size_t>(s) * T * C;
        for (int t = 0; t < T; ++t) {
            const double share = nominal_cycle(product, t + phase_offset) / C;
            double bad_mult = 1.0;
            if (anomalous) {
                if (cfg.onset == AnomalyOnset::Ramp)
                    bad_mult = 1.0 - (1.0 - factor) * (static_cast<double>(t) / (T - 1));
                else
                    bad_mult = (t < step_onset) ? 1.0 : factor;
            }
            const double comp_mult = 1.0 + (1.0 - bad_mult) / (C - 1);
            for (int c = 0; c < C; ++c) {
                const double mult = (c == bad_pump) ? bad_mult : (anomalous ? comp_mult : 1.0);
                out[static_cast<std::size_t>(t) * C + c] =
                    mult * share + noise_sd * noise(rng);
            }
        }
    }

    ds.meta["generator"] = "press.v1";
    ds.meta["task_seed"] = std::to_string(task_seed);
    ds.meta["n_pumps"] = std::to_string(C);
    ds.meta["noise_std"] = fmt_double(cfg.noise_std);
    ds.meta["cycle_period"] = fmt_double(product.cycle_period);
    ds.meta["ramp_frac"] = fmt_double(product.ramp_frac);
    ds.meta["hold_frac"] = fmt_double(product.hold_frac);
    ds.meta["hold_pressure"] = fmt_double(product.hold_pressure);
    ds.meta["base_pressure"] = fmt_double(product.base_pressure);
    ds.meta["phase"] = fmt_double(product.phase);
    ds.meta["weak_pump"] = std::to_string(weak_pump);
    ds.meta["onset"] = cfg.onset == AnomalyOnset::Ramp ? "ramp" : "step";
    ds.meta["degradation_lo"] = fmt_double(cfg.degradation_min);
    ds.meta["degradation_hi"] = fmt_double(cfg.degradation_max);
    ds.validate();
    return ds;
}

std::vector<TaskDataset> generate_press_catalog(int n_products, const PressGenConfig& cfg,
                                                std::uint64_t seed) {
    if (n_products < 1) throw ConfigError("catalog needs at least one product");
    std::vector<TaskDataset> out;
    out.reserve(static_cast<std::size_t>(n_products));
    for (int i = 0; i < n_products; ++i) {
        TaskDataset ds = generate_press_task(cfg, derive_seed(seed, static_cast<std::uint64_t>(i)));
        char id[32];
        std::snprintf(id, sizeof(id), "press-%02d", i);
        ds.task_id = id;
        out.push_back(std::move(ds));
    }
    return out;
}

void PermutedBenchConfig::validate() const {
    if (n_tasks < 1 || image_side < 2 || n_classes < 2 || channels < 1 || samples_per_class < 1)
        throw ConfigError("invalid permuted benchmark config");
    if ((image_side * image_side) % channels != 0)
        throw ConfigError("image pixels must divide evenly into channels");
    if (idx_images_path.empty() != idx_labels_path.empty())
        throw ConfigError("idx images and labels paths must be given together");
}

std::vector<int> make_permutation(int n, std::uint64_t seed, int task_index) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    if (task_index > 0) {
        Rng rng = make_rng(derive_seed(seed, 0x9e40u + static_cast<std::uint64_t>(task_index)));
        std::shuffle(perm.begin(), perm.end(), rng);
    }
    return perm;
}

namespace {

std::uint32_t read_be32(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace

std::pair<std::vector<double>, std::vector<int>> read_idx_pair(const std::string& images_path,
                                                               const std::string& labels_path) {
    auto img = slurp(images_path);
    if (img.size() < 16) throw DataError(images_path + ": truncated idx header at byte 0");
    if (read_be32(img.data()) != 0x00000803u)
        throw DataError(images_path + ": bad idx image magic at byte 0");
    const std::uint32_t n = read_be32(img.data() + 4);
    const std::uint32_t rows = read_be32(img.data() + 8);
    const std::uint32_t cols = read_be32(img.data() + 12);
    const std::size_t need = 16 + static_cast<std::size_t>(n) * rows * cols;
    if (img.size() < need)
        throw DataError(images_path + ": truncated idx payload at byte " +
                        std::to_string(img.size()));

    auto lab = slurp(labels_path);
    if (lab.size() < 8) throw DataError(labels_path + ": truncated idx header at byte 0");
    if (read_be32(lab.data()) != 0x00000801u)
        throw DataError(labels_path + ": bad idx label magic at byte 0");
    if (read_be32(lab.data() + 4) != n)
        throw DataError(labels_path + ": label count mismatch at byte 4");
    if (lab.size() < 8 + static_cast<std::size_t>(n))
        throw DataError(labels_path + ": truncated idx payload at byte " +
                        std::to_string(lab.size()));

    std::vector<double> pixels(static_cast<std::size_t>(n) * rows * cols);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        pixels[i] = static_cast<double>(img[16 + i]) / 255.0;
    std::vector<int> labels(n);
    for (std::uint32_t i = 0; i < n; ++i) labels[i] = lab[8 + i];
    return {std::move(pixels), std::move(labels)};
}

std::vector<TaskDataset> generate_permuted_tasks(const PermutedBenchConfig& cfg) {
    cfg.validate();
    const int pixels = cfg.image_side * cfg.image_side;
    const int T = pixels / cfg.channels, C = cfg.channels;

    // Source pool: [count][pixels] with labels in [0, n_classes)
    std::vector<double> pool;
    std::vector<int> pool_labels;
    if (!cfg.idx_images_path.empty()) {
        auto [px, lb] = read_idx_pair(cfg.idx_images_path, cfg.idx_labels_path);
        if (static_cast<int>(px.size() / std::max<std::size_t>(lb.size(), 1)) != pixels)
            throw DataError("idx image size does not match configured image_side");
        // keep samples_per_class per class, labels folded into [0, n_classes)
        std::vector<int> kept(static_cast<std::size_t>(cfg.n_classes), 0);
        for (std::size_t i = 0; i < lb.size(); ++i) {
            const int y = lb[i] % cfg.n_classes;
            if (kept[static_cast<std::size_t>(y)] >= cfg.samples_per_class) continue;
            kept[static_cast<std::size_t>(y)] += 1;
            pool.insert(pool.end(), px.begin() + static_cast<std::ptrdiff_t>(i) * pixels,
                        px.begin() + static_cast<std::ptrdiff_t>(i + 1) * pixels);
            pool_labels.push_back(y);
        }
    } else {
        // synthetic fallback: noisy class prototypes
        Rng rng = make_rng(derive_seed(cfg.seed, 0x1d));
        std::normal_distribution<double> nd(0.0, 1.0);
        std::vector<double> protos(static_cast<std::size_t>(cfg.n_classes) * pixels);
        for (auto& v : protos) v = nd(rng);
        for (int c = 0; c < cfg.n_classes; ++c)
            for (int s = 0; s < cfg.samples_per_class; ++s) {
                for (int j = 0; j < pixels; ++j)
                    pool.push_back(protos[static_cast<std::size_t>(c) * pixels + j] +
                                   cfg.noise_std * nd(rng));
                pool_labels.push_back(c);
            }
    }

    const int N = static_cast<int>(pool_labels.size());
    std::vector<TaskDataset> tasks;
    for (int t = 0; t < cfg.n_tasks; ++t) {
        std::vector<int> perm = make_permutation(pixels, cfg.seed, t);
        TaskDataset ds;
        ds.task_id = "permuted-" + std::to_string(t);
        ds.n = N;
        ds.steps = T;
        ds.channels = C;
        ds.inputs.resize(static_cast<std::size_t>(N) * pixels);
        ds.labels.resize(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) {
            ds.labels[static_cast<std::size_t>(i)] =
                static_cast<std::uint8_t>(pool_labels[static_cast<std::size_t>(i)]);
            const double* src = pool.data() + static_cast<std::size_t>(i) * pixels;
            double* dst = ds.inputs.data() + static_cast<std::size_t>(i) * pixels;
            for (int j = 0; j < pixels; ++j) dst[j] = src[perm[static_cast<std::size_t>(j)]];
        }
        ds.meta["generator"] = "permuted.v1";
        ds.meta["task_index"] = std::to_string(t);
        ds.meta["perm_seed"] = std::to_string(cfg.seed);
        ds.meta["image_side"] = std::to_string(cfg.image_side);
        ds.validate();
        tasks.push_back(std::move(ds));
    }
    return tasks;
}

// ---------------------------------------------------------------------------
// Dataset container
// ---------------------------------------------------------------------------

namespace {

constexpr char kDataMagic[4] = {'F', 'C', 'L', 'D'};
constexpr std::uint32_t kDataVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_str(std::string& buf, const std::string& s) {
    put_u32(buf, static_cast<std::uint32_t>(s.size()));
    buf += s;
}

struct Reader {
    const unsigned char* p;
    std::size_t size;
    std::size_t pos = 0;
    std::string path;

    void need(std::size_t n) {
        if (pos + n > size)
            throw DataError(path + ": truncated at byte " + std::to_string(pos));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(p + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_dataset(const TaskDataset& ds, const std::string& path) {
    ds.validate();
    std::string buf;
    buf.append(kDataMagic, 4);
    put_u32(buf, kDataVersion);
    put_str(buf, ds.task_id);
    put_u64(buf, static_cast<std::uint64_t>(ds.n));
    put_u64(buf, static_cast<std::uint64_t>(ds.steps));
    put_u64(buf, static_cast<std::uint64_t>(ds.channels));
    buf.append(reinterpret_cast<const char*>(ds.inputs.data()),
               ds.inputs.size() * sizeof(double));
    buf.append(reinterpret_cast<const char*>(ds.labels.data()), ds.labels.size());
    put_u32(buf, static_cast<std::uint32_t>(ds.meta.size()));
    for (const auto& [k, v] : ds.meta) {
        put_str(buf, k);
        put_str(buf, v);
    }
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    put_u32(buf, crc);

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed: " + path);
}

TaskDataset load_dataset(const std::string& path) {
    auto bytes = slurp(path);
    if (bytes.size() < 12) throw DataError(path + ": truncated at byte 0");
    const std::size_t body = bytes.size() - 4;
    const auto stored_crc =
        static_cast<std::uint32_t>(bytes[body]) | (static_cast<std::uint32_t>(bytes[body + 1]) << 8) |
        (static_cast<std::uint32_t>(bytes[body + 2]) << 16) |
        (static_cast<std::uint32_t>(bytes[body + 3]) << 24);
    const auto actual_crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(body)));
    if (stored_crc != actual_crc) throw DataError(path + ": checksum mismatch");

    Reader r{bytes.data(), body, 0, path};
    r.need(4);
    if (std::memcmp(r.p, kDataMagic, 4) != 0) throw DataError(path + ": bad magic at byte 0");
    r.pos = 4;
    if (r.u32() != kDataVersion) throw DataError(path + ": unsupported format version");

    TaskDataset ds;
    ds.task_id = r.str();
    ds.n = static_cast<int>(r.u64());
    ds.steps = static_cast<int>(r.u64());
    ds.channels = static_cast<int>(r.u64());
    const std::size_t nvals = static_cast<std::size_t>(ds.n) * ds.steps * ds.channels;
    r.need(nvals * sizeof(double));
    ds.inputs.resize(nvals);
    std::memcpy(ds.inputs.data(), r.p + r.pos, nvals * sizeof(double));
    r.pos += nvals * sizeof(double);
    r.need(static_cast<std::size_t>(ds.n));
    ds.labels.assign(r.p + r.pos, r.p + r.pos + ds.n);
    r.pos += static_cast<std::size_t>(ds.n);
    const std::uint32_t n_meta = r.u32();
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string k = r.str();
        ds.meta[k] = r.str();
    }
    ds.validate();
    return ds;
}

std::pair<std::vector<int>, std::vector<int>> stratified_split(const TaskDataset& ds,
                                                               double train_frac,
                                                               std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac must be in (0,1)");
    std::vector<int> by_class[2];
    for (int i = 0; i < ds.n; ++i) by_class[ds.labels[static_cast<std::size_t>(i)]].push_back(i);

    Rng rng = make_rng(derive_seed(seed, 0x511));
    std::vector<int> train, heldout;
    for (auto& cls : by_class) {
        std::shuffle(cls.begin(), cls.end(), rng);
        std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(cls.size()));
        n_train = std::min(n_train, cls.size() - 1);  // keep at least one heldout
        n_train = std::max<std::size_t>(n_train, 1);
        for (std::size_t i = 0; i < cls.size(); ++i)
            (i < n_train ? train : heldout).push_back(cls[i]);
    }
    return {std::move(train), std::move(heldout)};
}

}  // namespace forgecl
