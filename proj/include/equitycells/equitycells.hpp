#pragma once

#include "equitycells/approximator.hpp"
#include "equitycells/catalog.hpp"
#include "equitycells/curves.hpp"
#include "equitycells/error.hpp"
#include "equitycells/improve.hpp"
#include "equitycells/instance.hpp"
#include "equitycells/oracle.hpp"
#include "equitycells/rational.hpp"
