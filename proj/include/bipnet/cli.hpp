#pragma once
#include <ostream>
namespace bipnet { int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err); }
