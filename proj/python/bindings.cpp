#include <pybind11/pybind11.h>

PYBIND11_MODULE(_id3, m) {
    m.doc() = "identity-preserving diffusion toolkit";
}
