#include "mabret/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mabret {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'B', 'R', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
    std::ofstream out;
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw std::runtime_error("cannot write " + path);
    }
    void bytes(const void* p, std::size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void vec_f64(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void vec_u64(const std::vector<std::size_t>& v) {
        u64(v.size());
        for (std::size_t x : v) u64(x);
    }
    void vec_i32(const std::vector<int>& v) {
        u64(v.size());
        for (int x : v) i32(x);
    }
};

struct Reader {
    std::ifstream in;
    std::string path;
    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw std::runtime_error("cannot open " + p);
    }
    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in) throw std::runtime_error(path + ": truncated checkpoint");
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::vector<double> vec_f64() {
        std::vector<double> v(u64());
        for (double& x : v) x = f64();
        return v;
    }
    std::vector<std::size_t> vec_u64() {
        std::vector<std::size_t> v(u64());
        for (std::size_t& x : v) x = static_cast<std::size_t>(u64());
        return v;
    }
    std::vector<int> vec_i32() {
        std::vector<int> v(u64());
        for (int& x : v) x = i32();
        return v;
    }
};

void write_params(Writer& w, const NetworkParams& p) {
    w.u64(p.spec.size());
    for (const auto& s : p.spec) {
        w.u64(s.input_dim);
        w.u64(s.output_dim);
        w.u32(static_cast<std::uint32_t>(s.activation));
    }
    for (const auto& layer : p.layers) {
        w.vec_f64(layer.w.data);
        w.vec_f64(layer.b.data);
    }
}

NetworkParams read_params(Reader& r) {
    std::vector<LayerSpec> spec(r.u64());
    for (auto& s : spec) {
        s.input_dim = static_cast<std::size_t>(r.u64());
        s.output_dim = static_cast<std::size_t>(r.u64());
        s.activation = static_cast<Activation>(r.u32());
    }
    NetworkParams p = NetworkParams::zeros(spec);
    for (auto& layer : p.layers) {
        layer.w.data = r.vec_f64();
        layer.b.data = r.vec_f64();
    }
    return p;
}

void write_arm_stats(Writer& w, const std::vector<ArmStats>& arms) {
    w.u64(arms.size());
    for (const auto& a : arms) {
        w.i64(a.pulls);
        w.f64(a.reward_sum);
        w.f64(a.reward_sq_sum);
        w.f64(a.exp3_weight);
        w.f64(a.last_reward);
    }
}

std::vector<ArmStats> read_arm_stats(Reader& r) {
    std::vector<ArmStats> arms(r.u64());
    for (auto& a : arms) {
        a.pulls = r.i64();
        a.reward_sum = r.f64();
        a.reward_sq_sum = r.f64();
        a.exp3_weight = r.f64();
        a.last_reward = r.f64();
    }
    return arms;
}

}  // namespace

void save_checkpoint(const std::string& path, const SessionCheckpoint& ckpt) {
    Writer w(path);
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(kVersion);
    w.i32(ckpt.session);
    write_params(w, ckpt.params);

    w.f64(ckpt.adam.lr);
    w.f64(ckpt.adam.beta1);
    w.f64(ckpt.adam.beta2);
    w.f64(ckpt.adam.eps);
    w.i64(ckpt.adam.step);
    w.vec_f64(ckpt.adam.m);
    w.vec_f64(ckpt.adam.v);
    w.vec_f64(ckpt.adam.pow1);
    w.vec_f64(ckpt.adam.pow2);

    w.u32(ckpt.has_regularizer ? 1 : 0);
    if (ckpt.has_regularizer) {
        write_params(w, ckpt.regularizer.anchor);
        w.vec_f64(ckpt.regularizer.param_importance);
        w.u64(ckpt.regularizer.neuron_importance.size());
        for (const auto& layer : ckpt.regularizer.neuron_importance) w.vec_f64(layer);
        w.u64(ckpt.regularizer.sample_count);
    }

    w.u32(ckpt.has_clustering ? 1 : 0);
    if (ckpt.has_clustering) {
        w.u64(ckpt.clustering.labels.size());
        for (const auto& lab : ckpt.clustering.labels) w.vec_i32(lab);
        w.vec_i32(ckpt.clustering.k_per_layer);
        w.u64(ckpt.arms.size());
        for (const auto& arm : ckpt.arms) {
            w.i32(arm.id);
            w.vec_u64(arm.members);
        }
    }

    w.vec_u64(ckpt.selected);
    w.i32(ckpt.selected_from_session);
    write_arm_stats(w, ckpt.replay_arms);
    write_arm_stats(w, ckpt.cluster_arms);

    w.u32(ckpt.has_trajectory ? 1 : 0);
    if (ckpt.has_trajectory) {
        w.u64(ckpt.trajectory.param_count);
        w.u64(ckpt.trajectory.snapshots.size());
        for (const auto& snap : ckpt.trajectory.snapshots) w.vec_f64(snap);
    }
    if (!w.out) throw std::runtime_error("checkpoint write failed: " + path);
}

SessionCheckpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path + ": not a checkpoint file (bad magic)");
    std::uint32_t version = r.u32();
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version " +
                                 std::to_string(version));

    SessionCheckpoint ckpt;
    ckpt.session = r.i32();
    ckpt.params = read_params(r);

    ckpt.adam.lr = r.f64();
    ckpt.adam.beta1 = r.f64();
    ckpt.adam.beta2 = r.f64();
    ckpt.adam.eps = r.f64();
    ckpt.adam.step = r.i64();
    ckpt.adam.m = r.vec_f64();
    ckpt.adam.v = r.vec_f64();
    ckpt.adam.pow1 = r.vec_f64();
    ckpt.adam.pow2 = r.vec_f64();

    ckpt.has_regularizer = r.u32() != 0;
    if (ckpt.has_regularizer) {
        ckpt.regularizer.anchor = read_params(r);
        ckpt.regularizer.param_importance = r.vec_f64();
        ckpt.regularizer.neuron_importance.resize(r.u64());
        for (auto& layer : ckpt.regularizer.neuron_importance) layer = r.vec_f64();
        ckpt.regularizer.sample_count = static_cast<std::size_t>(r.u64());
    }

    ckpt.has_clustering = r.u32() != 0;
    if (ckpt.has_clustering) {
        ckpt.clustering.labels.resize(r.u64());
        for (auto& lab : ckpt.clustering.labels) lab = r.vec_i32();
        ckpt.clustering.k_per_layer = r.vec_i32();
        ckpt.arms.resize(r.u64());
        for (auto& arm : ckpt.arms) {
            arm.id = r.i32();
            arm.members = r.vec_u64();
        }
    }

    ckpt.selected = r.vec_u64();
    ckpt.selected_from_session = r.i32();
    ckpt.replay_arms = read_arm_stats(r);
    ckpt.cluster_arms = read_arm_stats(r);

    ckpt.has_trajectory = r.u32() != 0;
    if (ckpt.has_trajectory) {
        ckpt.trajectory.param_count = static_cast<std::size_t>(r.u64());
        ckpt.trajectory.snapshots.resize(r.u64());
        for (auto& snap : ckpt.trajectory.snapshots) snap = r.vec_f64();
    }
    return ckpt;
}

}  // namespace mabret
