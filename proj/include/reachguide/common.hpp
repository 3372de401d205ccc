#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reachguide {

using StateVec = Eigen::VectorXd;
using ControlVec = Eigen::VectorXd;

// Error taxonomy. The CLI maps each class onto a distinct exit code.

/// Caller broke a documented precondition (dimension mismatch, dt <= 0, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid or inconsistent configuration (unknown system, bad preset, empty box).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite value produced during a computation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, written, or parsed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Query outside the domain covered by a tabulated object.
class OutOfDomainError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Operation not available for this system (e.g. bang-bang control of a non-affine model).
class UnsupportedOperation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

std::string format_vector(std::span<const double> v);
inline std::string format_vector(const Eigen::VectorXd& v)
{
    return format_vector(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

// ---------------------------------------------------------------------------
// Counter-based random streams.
//
// Every stream is a pure function of (root seed, id tuple), so results never
// depend on the order in which work items are scheduled.

std::uint64_t mix64(std::uint64_t z);
std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t key) : state_(key) {}
    RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids)
        : state_(stream_key(seed, ids)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    double normal();
    std::size_t index(std::size_t n);

private:
    std::uint64_t state_;
};

// Well-known stream tags so modules never collide on the same id tuple.
enum class StreamTag : std::uint64_t {
    MpcPoint = 0x1001,
    MpcPerturb = 0x1002,
    TrainData = 0x2001,
    TrainPde = 0x2002,
    NetInit = 0x2003,
    Calibration = 0x3001,
    Volume = 0x3002,
    Accuracy = 0x3003,
    PolicyEval = 0x3004,
    Refine = 0x1003,
    Finetune = 0x1004,
};

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

// ---------------------------------------------------------------------------
// Data-parallel helpers. Work is split statically into contiguous ranges;
// callers write into per-index slots so output never depends on thread count.

void set_thread_count(int n);
int thread_count();

/// Reads REACHGUIDE_THREADS when set; otherwise leaves the current value.
void init_threads_from_env();

void parallel_for(std::size_t n, const std::function<void(std::size_t begin, std::size_t end)>& fn);

/// Pairwise (tree) summation with a fixed association order.
double pairwise_sum(std::span<const double> v);

// ---------------------------------------------------------------------------
// Artifact helpers.

inline constexpr const char* kToolVersion = "0.1.0";

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string digest_string(const std::string& text);

/// Renames a fully written temp file onto its final path.
void commit_file(const std::string& tmp, const std::string& path);

/// Writes text to path via a temp file and rename.
void write_text_atomic(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

} // namespace reachguide
