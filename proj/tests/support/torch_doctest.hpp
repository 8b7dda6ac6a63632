#pragma once
// libtorch's logging defines CHECK; the test suites want doctest's.
#include <torch/torch.h>
#undef CHECK
#include <doctest.h>
