#include "pf/kernels.hpp"

#include "kernels_impl.hpp"

namespace pf::kern {

template <typename T>
const Kernels<T>& scalar_table() {
    static const Kernels<T> t = {
        &ref::matmul<T>, &ref::add<T>, &ref::sub<T>, &ref::mul<T>,
        &ref::scale<T>,  &ref::axpy<T>, &ref::acc<T>,
    };
    return t;
}

template const Kernels<float>& scalar_table<float>();
template const Kernels<double>& scalar_table<double>();

}  // namespace pf::kern
