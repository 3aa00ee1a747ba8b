#pragma once

#include "partfilter/chain.hpp"
#include "partfilter/dynamics.hpp"
#include "partfilter/entropy.hpp"
#include "partfilter/error.hpp"
#include "partfilter/gallery.hpp"
#include "partfilter/kantorovich.hpp"
#include "partfilter/matrix.hpp"
#include "partfilter/measure.hpp"
#include "partfilter/model.hpp"
#include "partfilter/numeric.hpp"
#include "partfilter/parallel.hpp"
#include "partfilter/partition.hpp"
#include "partfilter/stability.hpp"
#include "partfilter/test_function.hpp"
#include "partfilter/transport.hpp"
#include "partfilter/vector.hpp"
