#pragma once

#include "tatelab/characters.hpp"
#include "tatelab/exact.hpp"
#include "tatelab/green.hpp"
#include "tatelab/linalg.hpp"
#include "tatelab/mfe.hpp"
#include "tatelab/padic.hpp"
#include "tatelab/parallel.hpp"
#include "tatelab/spectral.hpp"
#include "tatelab/verify.hpp"
