#include "acceptance_suite.hpp"

int main() { return qphot::acceptance::run_all() == 0 ? 0 : 1; }
