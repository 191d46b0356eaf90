#pragma once

// libtorch's logging header defines CHECK too; doctest's must win.
#include <torch/torch.h>
#undef CHECK
#include <doctest.h>
