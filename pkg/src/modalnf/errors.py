"""Exception hierarchy shared by every layer of the package."""


class ModalNFError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for this failure."""

    exit_code = 1


class InputError(ModalNFError):
    exit_code = 2


class ParseError(InputError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ModelInvariantViolation(InputError):
    pass


class UnclassifiableMode(ModelInvariantViolation):
    pass


class MissingMode(InputError):
    pass


class ModelMismatch(InputError):
    pass


class NotQuadraticConvolution(InputError):
    pass


class ZeroDivisor(ModalNFError):
    exit_code = 3


class SmallDivisor(ModalNFError):
    exit_code = 3

    def __init__(self, q, j, mu, mu_tilde):
        self.q, self.j, self.mu = q, j, mu
        super().__init__(
            f"eliminated term (j={j}, q={q}) has |Re mu|={abs(mu.re)} <= mu_tilde={mu_tilde}"
        )


class OrderViolation(ModalNFError):
    exit_code = 3


class ResidualOrderViolation(OrderViolation):
    pass


class NonFinite(ModalNFError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"state became non-finite at t={t}")


class InsideViolation(ModalNFError):
    def __init__(self, t, norm, mu_tilde):
        self.t, self.norm = t, norm
        super().__init__(f"trajectory left D_mu at t={t}: tilde norm {norm} >= {mu_tilde}")


class VerificationFailure(ModalNFError):
    """A named identity did not hold."""

    def __init__(self, identity, detail=""):
        self.identity = identity
        super().__init__(f"{identity}: {detail}" if detail else identity)
