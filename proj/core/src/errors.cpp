#include "carnot/errors.hpp"
