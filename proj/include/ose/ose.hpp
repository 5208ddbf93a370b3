#pragma once

#include "ose/auditor.hpp"
#include "ose/collision.hpp"
#include "ose/dense.hpp"
#include "ose/embedding.hpp"
#include "ose/errors.hpp"
#include "ose/hard_instance.hpp"
#include "ose/harness/config.hpp"
#include "ose/harness/lemmas.hpp"
#include "ose/harness/min_m.hpp"
#include "ose/harness/report.hpp"
#include "ose/harness/sweep.hpp"
#include "ose/montecarlo.hpp"
#include "ose/parallel.hpp"
#include "ose/random.hpp"
#include "ose/sketches.hpp"
#include "ose/sparse.hpp"
#include "ose/text_io.hpp"
