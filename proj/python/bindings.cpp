#include <pybind11/pybind11.h>
PYBIND11_MODULE(_xlit, m) { m.doc() = "placeholder"; }
