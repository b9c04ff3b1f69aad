#pragma once

#include <iosfwd>
#include <string>

#include "funnelsim/simulator.hpp"

namespace funnelsim {

/// Tab-separated columns for gnuplot. A blank line separates availability
/// segments so the funnel boundary is not drawn across a dropout; psi columns
/// are left empty while a = 0.
void write_error_columns(const Trace& trace, std::ostream& out);   // t a e_norm psi -psi
void write_input_columns(const Trace& trace, std::ostream& out);   // t u_1..u_m u_norm
void write_internal_columns(const Trace& trace, std::ostream& out);  // t eta_1..eta_k eta_norm

/// Writes <dir>/<stem>_error.dat, _input.dat and _internal.dat.
void write_plot_files(const Trace& trace, const std::string& dir, const std::string& stem);

}  // namespace funnelsim
