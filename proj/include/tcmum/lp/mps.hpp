#pragma once

#include <ostream>
#include <string>

#include "tcmum/lp/linear_program.hpp"

namespace tcmum::lp {

// Fixed-column MPS. Rows and columns are renamed R0000001.. / C0000001.. to
// fit the 8-character fields; the objective constant goes on the RHS of OBJ.
void write_mps(const LinearProgram& model, std::ostream& out,
               const std::string& name = "TCMUM");

}  // namespace tcmum::lp
