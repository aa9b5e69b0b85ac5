#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

#include <Eigen/Core>

#include "fractura/adapt.hpp"
#include "fractura/mesh.hpp"
#include "fractura/model.hpp"

namespace fractura {

/// Cap internal parallelism from the FRACTURA_THREADS environment variable.
/// Unset or 1 keeps every solve single-threaded (bitwise deterministic).
inline int configure_threads() {
    int n = 1;
    if (const char* env = std::getenv("FRACTURA_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) n = v;
    }
    Eigen::setNbThreads(n);
    return n;
}

/// Legacy ASCII VTK unstructured-grid snapshot: displacement as point
/// vectors, phi as point scalars, history as a cell scalar (max over the
/// element's quadrature points).
inline void write_vtk(std::ostream& out, const TriMesh& mesh, const std::vector<double>& u,
                      const std::vector<double>& phi, const HistoryField& H,
                      const std::string& title = "fractura snapshot") {
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << std::setprecision(12);
    out << "POINTS " << mesh.n_vertices() << " double\n";
    for (const auto& v : mesh.vertices) out << v.x << " " << v.y << " 0\n";
    out << "CELLS " << mesh.n_triangles() << " " << 4 * mesh.n_triangles() << "\n";
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "CELL_TYPES " << mesh.n_triangles() << "\n";
    for (std::size_t i = 0; i < mesh.n_triangles(); ++i) out << "5\n";
    out << "POINT_DATA " << mesh.n_vertices() << "\n";
    out << "VECTORS displacement double\n";
    for (std::size_t i = 0; i < mesh.n_vertices(); ++i)
        out << u[2 * i] << " " << u[2 * i + 1] << " 0\n";
    out << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < mesh.n_vertices(); ++i) out << phi[i] << "\n";
    out << "CELL_DATA " << mesh.n_triangles() << "\n";
    out << "SCALARS history double 1\nLOOKUP_TABLE default\n";
    for (TriId t = 0; t < mesh.n_triangles(); ++t) out << H.element_max(t) << "\n";
}

inline void write_vtk_file(const std::string& path, const TriMesh& mesh,
                           const std::vector<double>& u, const std::vector<double>& phi,
                           const HistoryField& H, const std::string& title = "fractura snapshot") {
    std::ofstream f(path);
    if (!f) throw FileNotFound("cannot open VTK output: " + path);
    write_vtk(f, mesh, u, phi, H, title);
}

/// Run log CSV, one row per accepted step.
inline void write_runlog(std::ostream& out, const std::vector<StepRecord>& records) {
    out << "step,t,dt,E,n_elements,h_min,n_stagger,dissipation,crack_tip_x,crack_tip_speed\n";
    out << std::setprecision(17);
    for (const auto& r : records) {
        out << r.step << ',' << r.t << ',' << r.dt << ',' << r.E << ',' << r.n_elements << ','
            << r.h_min << ',' << r.n_stagger << ',' << r.dissipation << ',' << r.crack_tip_x << ','
            << r.crack_tip_speed << '\n';
    }
}

inline void write_runlog_file(const std::string& path, const std::vector<StepRecord>& records) {
    std::ofstream f(path);
    if (!f) throw FileNotFound("cannot open run log: " + path);
    write_runlog(f, records);
}

} // namespace fractura
