// Per-path artifact: norm time series, probe series, snapshots, and the
// stopping/pasting event log. Serialized as a little-endian binary stream
// with a versioned header (see record.cpp for the exact layout).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spdelab {

enum class Termination : std::uint32_t {
    Completed = 0,
    SuspectedBlowup = 1,  // taming level would exceed m_max
    NumericalBlowup = 2,  // NaN/Inf appeared in the state
    StabilityBudget = 3,  // dt exceeded the step budget after a level change
};

enum class EventKind : std::uint32_t {
    Paste = 0,      // taming level raised, integration continued
    Terminate = 1,  // path ended early
};

struct PathEvent {
    double time = 0;
    double m_before = 0;
    double m_after = 0;
    std::uint32_t witness_index = 0;
    EventKind kind = EventKind::Paste;
};

struct Snapshot {
    double time = 0;
    std::uint32_t step = 0;
    std::vector<double> values;
    std::vector<double> bessel_norms; // one per configured gamma
};

struct PathRecord {
    std::uint64_t fingerprint = 0;
    std::uint32_t path_index = 0;

    std::uint32_t dim = 1;
    std::uint32_t n = 0;
    double half_length = 0;
    double dt = 0;
    double t_final = 0;

    double psi_k = 1;
    double bessel_p = 2;
    std::vector<double> bessel_gammas;
    std::vector<double> p_list;
    std::vector<std::uint32_t> probes; // flat lattice indices

    Termination termination = Termination::Completed;
    double termination_time = -1;
    double min_u = 0;    // min over all steps and points
    double sup_u0 = 0;

    // Entry i corresponds to time i*dt; terminated paths stop early.
    std::vector<double> sup_series;
    std::vector<double> l1_series;
    std::vector<double> psi_l1_series;
    std::vector<std::vector<double>> lp_series;    // [p_list index][time index]
    std::vector<std::vector<double>> probe_series; // [probe index][time index]

    std::vector<Snapshot> snapshots;
    std::vector<PathEvent> events;

    std::size_t steps_recorded() const { return sup_series.size(); }
    double time_at(std::size_t i) const { return double(i) * dt; }

    void write_file(const std::string& path) const;
    static PathRecord read_file(const std::string& path);
};

} // namespace spdelab
