"""cvm: a miniature component-container middleware with an embeddable
reconfiguration VM, administered remotely over an AST-shipping protocol."""

__version__ = "0.1.0"
