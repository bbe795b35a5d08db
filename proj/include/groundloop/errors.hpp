#pragma once

#include <stdexcept>
#include <string>

namespace groundloop {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// geometry
class ZeroDimensionImage : public Error { public: using Error::Error; };
class InvalidBox : public Error { public: using Error::Error; };
class DegenerateBox : public Error { public: using Error::Error; };

// round-1 parsing
class EmptyItemList : public Error { public: using Error::Error; };

// agents
class AgentUnavailable : public Error { public: using Error::Error; };
class FixtureParseError : public Error { public: using Error::Error; };

// composition / routing
class NoCluesRequested : public Error { public: using Error::Error; };
class PlanMismatch : public Error { public: using Error::Error; };

// backend
class BackendUnavailable : public Error { public: using Error::Error; };
class MalformedResponse : public Error { public: using Error::Error; };

// datasets / scoring
class SchemaMismatch : public Error { public: using Error::Error; };
class MissingGold : public Error { public: using Error::Error; };
class MissingReference : public Error { public: using Error::Error; };

// curation
class NoSmallObjects : public Error { public: using Error::Error; };

// configuration
class ConfigError : public Error { public: using Error::Error; };

} // namespace groundloop
