#ifndef PROXCLUST_PROXCLUST_HPP
#define PROXCLUST_PROXCLUST_HPP

#include "proxclust/boosting.hpp"
#include "proxclust/cluster.hpp"
#include "proxclust/error.hpp"
#include "proxclust/generators.hpp"
#include "proxclust/harness.hpp"
#include "proxclust/io.hpp"
#include "proxclust/matching.hpp"
#include "proxclust/matrix.hpp"
#include "proxclust/model.hpp"
#include "proxclust/proximity.hpp"
#include "proxclust/version.hpp"

#endif
