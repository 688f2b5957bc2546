#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "forgecl/errors.hpp"

namespace forgecl {

// One named contiguous slice of the flat parameter vector. Matrices are
// stored column-major so Eigen::Map works without copies.
struct Segment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::size_t rows = 0;  // rows == length, cols == 1 for bias vectors
    std::size_t cols = 1;
};

// Ordered segment table; offsets tile [0, total) exactly.
class SegmentMap {
  public:
    SegmentMap() = default;

    void add(const std::string& name, std::size_t rows, std::size_t cols) {
        Segment s;
        s.name = name;
        s.offset = total_;
        s.rows = rows;
        s.cols = cols;
        s.length = rows * cols;
        total_ += s.length;
        segments_.push_back(std::move(s));
    }

    const std::vector<Segment>& segments() const { return segments_; }
    std::size_t total() const { return total_; }

    const Segment& at(const std::string& name) const {
        for (const auto& s : segments_)
            if (s.name == name) return s;
        throw UsageError("unknown segment: " + name);
    }

    bool same_layout(const SegmentMap& other) const {
        if (total_ != other.total_ || segments_.size() != other.segments_.size()) return false;
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const Segment &a = segments_[i], &b = other.segments_[i];
            if (a.name != b.name || a.offset != b.offset || a.length != b.length ||
                a.rows != b.rows || a.cols != b.cols)
                return false;
        }
        return true;
    }

  private:
    std::vector<Segment> segments_;
    std::size_t total_ = 0;
};

using SegmentMapPtr = std::shared_ptr<const SegmentMap>;

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Flat vector of all trainable weights plus the segment table describing it.
struct ParamVector {
    SegmentMapPtr map;
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(SegmentMapPtr m) : map(std::move(m)), values(map->total(), 0.0) {}

    std::size_t size() const { return values.size(); }

    MatMap mat(const std::string& name) {
        const Segment& s = map->at(name);
        return MatMap(values.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                      static_cast<Eigen::Index>(s.cols));
    }
    ConstMatMap mat(const std::string& name) const {
        const Segment& s = map->at(name);
        return ConstMatMap(values.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                           static_cast<Eigen::Index>(s.cols));
    }
    VecMap vec(const std::string& name) {
        const Segment& s = map->at(name);
        return VecMap(values.data() + s.offset, static_cast<Eigen::Index>(s.length));
    }
    ConstVecMap vec(const std::string& name) const {
        const Segment& s = map->at(name);
        return ConstVecMap(values.data() + s.offset, static_cast<Eigen::Index>(s.length));
    }
};

// Same flat layout as the ParamVector it differentiates.
struct Gradient {
    SegmentMapPtr map;
    std::vector<double> values;

    Gradient() = default;
    explicit Gradient(SegmentMapPtr m) : map(std::move(m)), values(map->total(), 0.0) {}

    std::size_t size() const { return values.size(); }

    MatMap mat(const std::string& name) {
        const Segment& s = map->at(name);
        return MatMap(values.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                      static_cast<Eigen::Index>(s.cols));
    }
    VecMap vec(const std::string& name) {
        const Segment& s = map->at(name);
        return VecMap(values.data() + s.offset, static_cast<Eigen::Index>(s.length));
    }
};

inline void require_congruent(const ParamVector& p, const Gradient& g) {
    if (!p.map || !g.map || !p.map->same_layout(*g.map) || p.values.size() != g.values.size())
        throw ShapeError("gradient layout does not match parameter vector");
}

// FNV-1a over the raw bytes; used to detect stale forward traces.
inline std::uint64_t fingerprint(const std::vector<double>& v) {
    std::uint64_t h = 14695981039346656037ULL;
    const unsigned char* p = reinterpret_cast<const unsigned char*>(v.data());
    for (std::size_t i = 0; i < v.size() * sizeof(double); ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace forgecl
