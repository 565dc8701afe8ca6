#ifndef CONLE_CORE_VERSION_HPP
#define CONLE_CORE_VERSION_HPP

#define CONLE_VERSION "0.1.0"

#endif
