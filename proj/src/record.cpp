// Binary layout, little-endian, no padding (each scalar written directly):
//   magic "SPDEREC1" (8 bytes), version u32
//   fingerprint u64, path_index u32
//   dim u32, n u32, half_length f64, dt f64, t_final f64
//   psi_k f64, bessel_p f64
//   bessel_gammas: u32 count, f64[count]
//   p_list:        u32 count, f64[count]
//   probes:        u32 count, u32[count]
//   termination u32, termination_time f64, min_u f64, sup_u0 f64
//   series block: u32 steps_recorded, then sup/l1/psi_l1 f64[steps],
//                 then lp_series and probe_series in declared order
//   snapshots: u32 count, each {time f64, step u32, values f64[n^dim],
//              bessel f64[gamma count]}
//   events: u32 count, each {time f64, m_before f64, m_after f64,
//           witness u32, kind u32}
#include "spdelab/record.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace spdelab {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'D', 'E', 'R', 'E', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("PathRecord: truncated file");
    return v;
}
void put_f64s(std::ostream& os, const std::vector<double>& v) {
    put<std::uint32_t>(os, std::uint32_t(v.size()));
    os.write(reinterpret_cast<const char*>(v.data()),
             std::streamsize(v.size() * sizeof(double)));
}
std::vector<double> get_f64s(std::istream& is) {
    std::vector<double> v(get<std::uint32_t>(is));
    is.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    if (!is) throw std::runtime_error("PathRecord: truncated file");
    return v;
}

} // namespace

void PathRecord::write_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("PathRecord: cannot open for write: " + path);
    os.write(kMagic, 8);
    put(os, kVersion);
    put(os, fingerprint);
    put(os, path_index);
    put(os, dim);
    put(os, n);
    put(os, half_length);
    put(os, dt);
    put(os, t_final);
    put(os, psi_k);
    put(os, bessel_p);
    put_f64s(os, bessel_gammas);
    put_f64s(os, p_list);
    put<std::uint32_t>(os, std::uint32_t(probes.size()));
    for (auto p : probes) put(os, p);
    put(os, std::uint32_t(termination));
    put(os, termination_time);
    put(os, min_u);
    put(os, sup_u0);

    put<std::uint32_t>(os, std::uint32_t(sup_series.size()));
    auto put_raw = [&](const std::vector<double>& v) {
        os.write(reinterpret_cast<const char*>(v.data()),
                 std::streamsize(v.size() * sizeof(double)));
    };
    put_raw(sup_series);
    put_raw(l1_series);
    put_raw(psi_l1_series);
    for (const auto& s : lp_series) put_raw(s);
    for (const auto& s : probe_series) put_raw(s);

    put<std::uint32_t>(os, std::uint32_t(snapshots.size()));
    for (const auto& s : snapshots) {
        put(os, s.time);
        put(os, s.step);
        put_raw(s.values);
        put_raw(s.bessel_norms);
    }
    put<std::uint32_t>(os, std::uint32_t(events.size()));
    for (const auto& e : events) {
        put(os, e.time);
        put(os, e.m_before);
        put(os, e.m_after);
        put(os, e.witness_index);
        put(os, std::uint32_t(e.kind));
    }
    if (!os) throw std::runtime_error("PathRecord: write failed: " + path);
}

PathRecord PathRecord::read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("PathRecord: cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("PathRecord: bad magic in " + path);
    if (get<std::uint32_t>(is) != kVersion)
        throw std::runtime_error("PathRecord: unsupported version in " + path);

    PathRecord r;
    r.fingerprint = get<std::uint64_t>(is);
    r.path_index = get<std::uint32_t>(is);
    r.dim = get<std::uint32_t>(is);
    r.n = get<std::uint32_t>(is);
    r.half_length = get<double>(is);
    r.dt = get<double>(is);
    r.t_final = get<double>(is);
    r.psi_k = get<double>(is);
    r.bessel_p = get<double>(is);
    r.bessel_gammas = get_f64s(is);
    r.p_list = get_f64s(is);
    r.probes.resize(get<std::uint32_t>(is));
    for (auto& p : r.probes) p = get<std::uint32_t>(is);
    r.termination = Termination(get<std::uint32_t>(is));
    r.termination_time = get<double>(is);
    r.min_u = get<double>(is);
    r.sup_u0 = get<double>(is);

    const std::uint32_t steps = get<std::uint32_t>(is);
    auto get_raw = [&](std::vector<double>& v, std::size_t count) {
        v.resize(count);
        is.read(reinterpret_cast<char*>(v.data()), std::streamsize(count * sizeof(double)));
        if (!is) throw std::runtime_error("PathRecord: truncated series in " + path);
    };
    get_raw(r.sup_series, steps);
    get_raw(r.l1_series, steps);
    get_raw(r.psi_l1_series, steps);
    r.lp_series.resize(r.p_list.size());
    for (auto& s : r.lp_series) get_raw(s, steps);
    r.probe_series.resize(r.probes.size());
    for (auto& s : r.probe_series) get_raw(s, steps);

    const std::size_t field_size = std::size_t(r.n) * (r.dim == 2 ? r.n : 1);
    r.snapshots.resize(get<std::uint32_t>(is));
    for (auto& s : r.snapshots) {
        s.time = get<double>(is);
        s.step = get<std::uint32_t>(is);
        get_raw(s.values, field_size);
        get_raw(s.bessel_norms, r.bessel_gammas.size());
    }
    r.events.resize(get<std::uint32_t>(is));
    for (auto& e : r.events) {
        e.time = get<double>(is);
        e.m_before = get<double>(is);
        e.m_after = get<double>(is);
        e.witness_index = get<std::uint32_t>(is);
        e.kind = EventKind(get<std::uint32_t>(is));
    }
    return r;
}

} // namespace spdelab
