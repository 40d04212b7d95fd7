"""Coalition situational-understanding service.

Streams probabilistic sensor events from coalition partners, fuses them
into complex events with an event-calculus reasoner, and serves the live
picture to analyst consoles over WebSockets.
"""

__version__ = "0.1.0"
