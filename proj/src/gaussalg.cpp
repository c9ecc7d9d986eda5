#include <gausskern/gaussalg.hpp>

namespace gausskern {

template class Precision<double>;
template class Cholesky<double>;
template class GaussianExpansion<double>;

} // namespace gausskern
