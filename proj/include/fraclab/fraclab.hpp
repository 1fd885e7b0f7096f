#pragma once

#include "fraclab/barrier.hpp"
#include "fraclab/counterexample.hpp"
#include "fraclab/dirichlet.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/greenball.hpp"
#include "fraclab/hopf.hpp"
#include "fraclab/io.hpp"
#include "fraclab/operator.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/specialfn.hpp"
#include "fraclab/sphere.hpp"
#include "fraclab/vec.hpp"
