#ifndef FIBCAST_PARALLEL_HPP
#define FIBCAST_PARALLEL_HPP

namespace fibcast::par {

// Thread count used by the OpenMP kernels. 0 means the OpenMP runtime
// default; 1 forces the kernels onto their serial paths.
//
// Every parallel kernel in this library also has a *_serial reference
// implementation. The contract, enforced by tests, is that the parallel
// path produces bit-identical results for any thread count: work items
// write to disjoint output slots and reductions happen serially over
// those slots in index order.
void set_threads(int n);
int threads();

// True when more than one thread may be used.
bool enabled();

} // namespace fibcast::par

#endif
