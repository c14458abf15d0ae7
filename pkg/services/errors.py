"""
Error Types
Exception hierarchy shared by the grammar, parser, knowledge-base and CLI layers
"""


class SsparseError(Exception):
    """Base class for every error raised by ssparse services"""


class ConfigurationError(SsparseError):
    """Invalid configuration value (config file, environment or flag)"""


class InputError(SsparseError):
    """Missing or unreadable input file, or malformed command-line value"""


# --- Grammar ---

class GrammarError(SsparseError):
    """Grammar could not be loaded or queried"""


class GrammarSyntaxError(GrammarError):
    """Malformed grammar file line"""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class UnknownSymbolError(GrammarError):
    """Nonterminal not declared in the grammar"""


# --- Parsing ---

class ParseError(SsparseError):
    """Sentence could not be parsed"""


class UnknownTokenError(ParseError):
    def __init__(self, token, position):
        self.token = token
        self.position = position
        super().__init__(f"unknown token '{token}' at position {position}")


class NoParseError(ParseError):
    """Start symbol absent from the full-span cell"""


class EnumerationCapError(ParseError):
    """More complete parses than the enumeration cap allows"""


class TreeRuleError(SsparseError):
    """A tree node uses a rule that is not part of the grammar"""


# --- MEBN ---

class MTheoryError(SsparseError):
    """Knowledge base could not be loaded or queried"""


class MTheoryFormatError(MTheoryError):
    """Malformed MTheory document"""


class MTheoryValidationError(MTheoryError):
    def __init__(self, violations):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"MTheory validation failed: {summary}{more}")


class UnknownVariableError(MTheoryError):
    """Random variable template not resident in any MFrag"""


class UnknownEntityError(MTheoryError):
    """Entity identifier missing from the registry"""


class GroundingDepthError(MTheoryError):
    """Recursive grounding went deeper than the depth limit"""


class InconsistentEvidenceError(MTheoryError):
    """Evidence has zero joint probability"""


class StateSpaceCapError(MTheoryError):
    """Joint state space too large for brute-force enumeration"""


# --- Bridge / conflation ---

class BridgeError(SsparseError):
    """Grammar and knowledge base cannot be bridged"""


class NameCollisionError(BridgeError):
    """Nonterminal name already used by a variable of a different kind"""


class DerivationError(BridgeError):
    """Derivation text cannot be registered as an entity"""


class ConflationError(SsparseError):
    """Conflation of contradictory or malformed distributions"""


class SemanticQueryError(SsparseError):
    """Knowledge-base query failed while resolving an ambiguity"""

    def __init__(self, message, span=None, lhs=None):
        self.span = span
        self.lhs = lhs
        if span is not None:
            message = f"{lhs} over span [{span[0]}, {span[1]}): {message}"
        super().__init__(message)
