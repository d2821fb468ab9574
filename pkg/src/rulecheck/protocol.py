"""Line protocol for external inference engines (see docs/protocol.md).

Requests::

    LOAD <program on one line>      ->  OK | ERROR <message>
    QUERY <literals>?               ->  TRUE|FALSE|UNKNOWN [NOMODEL]
                                        ANSWER <X = t, ...>   (zero or more)
                                        END
                                    or  ERROR <message>
    QUIT                            ->  (connection closed)
"""

from __future__ import annotations

import socket
import socketserver
import subprocess
import threading

from .engines import BuiltinEngine, EngineTimeout, QueryOutcome, _as_query
from .kb import Program, RuleCheckError
from .parser import ParseError, format_bindings, parse_bindings, parse_program, parse_query

STATUS = {"true": "TRUE", "false": "FALSE", "unknown": "UNKNOWN"}
LABELS = {v: k for k, v in STATUS.items()}


class ProtocolError(RuleCheckError):
    pass


def one_line(program: Program) -> str:
    return " ".join(str(x) for x in program.clauses + program.constraints)


def format_outcome(out: QueryOutcome) -> list:
    status = STATUS[out.label] + (" NOMODEL" if out.no_stable_model else "")
    lines = [status]
    if out.label == "true":
        lines += [("ANSWER " + format_bindings(a)).rstrip() for a in out.answers]
    lines.append("END")
    return lines


def handle(engine, state: dict, line: str) -> list | None:
    """Answer one request line; ``None`` means close the session."""
    cmd, _, rest = line.strip().partition(" ")
    try:
        if cmd == "QUIT":
            return None
        if cmd == "LOAD":
            state["program"] = parse_program(rest)
            return ["OK"]
        if cmd == "QUERY":
            if "program" not in state:
                return ["ERROR no program loaded"]
            return format_outcome(engine.ask(state["program"], parse_query(rest)))
        return [f"ERROR unknown command {cmd!r}"]
    except ParseError as e:
        return [f"ERROR parse: {_flat(e)}"]
    except EngineTimeout:
        return ["ERROR timeout"]
    except (RuleCheckError, ValueError) as e:
        return [f"ERROR {_flat(e)}"]


def _flat(e) -> str:
    return " ".join(str(e).split())


def serve_stream(engine, rfile, wfile) -> None:
    """Serve requests from a text stream until QUIT or end of input."""
    state: dict = {}
    for line in rfile:
        if not line.strip():
            continue
        reply = handle(engine, state, line)
        if reply is None:
            break
        wfile.write("".join(r + "\n" for r in reply))
        wfile.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        serve_stream(self.server.engine, _text(self.rfile), _TextWriter(self.wfile))


def _text(binary):
    for raw in binary:
        yield raw.decode("utf-8")


class _TextWriter:
    def __init__(self, binary):
        self.binary = binary

    def write(self, s: str):
        self.binary.write(s.encode("utf-8"))

    def flush(self):
        self.binary.flush()


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def make_server(engine=None, host: str = "127.0.0.1", port: int = 0) -> _Server:
    """A TCP server wrapping ``engine`` (default: the built-in WFS engine)."""
    server = _Server((host, port), _Handler)
    server.engine = _Locked(engine or BuiltinEngine())
    return server


def start_server(engine=None, host: str = "127.0.0.1", port: int = 0) -> _Server:
    """Start :func:`make_server` in a daemon thread; call ``shutdown()`` to stop it."""
    server = make_server(engine, host, port)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server


class _Locked:
    def __init__(self, engine):
        self.engine = engine
        self.lock = threading.Lock()

    def ask(self, program, query):
        with self.lock:
            return self.engine.ask(program, query)


class ExternalEngine:
    """Client side of the protocol over a socket or a child process's pipes."""

    def __init__(self, rfile, wfile, label: str = "external", close=None):
        self._r, self._w = rfile, wfile
        self._close = close
        self._loaded = None
        self.label = label

    @classmethod
    def connect(cls, address: str, timeout: float = 30.0, label: str | None = None):
        host, _, port = address.rpartition(":")
        if not host or not port.isdigit():
            raise ProtocolError(f"expected host:port, got {address!r}")
        try:
            sock = socket.create_connection((host, int(port)), timeout=timeout)
        except OSError as e:
            raise ProtocolError(f"cannot connect to {address}: {e}") from e
        f = sock.makefile("rw", encoding="utf-8", newline="\n")

        def close():
            f.close()
            sock.close()

        return cls(f, f, label or f"external:{address}", close)

    @classmethod
    def spawn(cls, argv, label: str | None = None):
        proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                text=True, encoding="utf-8")

        def close():
            proc.stdin.close()
            proc.wait(timeout=5)
            proc.stdout.close()

        return cls(proc.stdout, proc.stdin, label or "external:" + " ".join(argv), close)

    def _send(self, line: str):
        try:
            self._w.write(line + "\n")
            self._w.flush()
        except OSError as e:
            raise ProtocolError(f"engine connection lost: {e}") from e

    def _recv(self) -> str:
        try:
            line = self._r.readline()
        except OSError as e:
            raise ProtocolError(f"engine connection lost: {e}") from e
        if not line:
            raise ProtocolError("engine closed the connection")
        return line.rstrip("\r\n")

    def load(self, program: Program):
        self._send("LOAD " + one_line(program))
        reply = self._recv()
        if reply != "OK":
            raise ProtocolError(f"LOAD rejected: {reply}")
        self._loaded = program

    def ask(self, program: Program, query) -> QueryOutcome:
        if program != self._loaded:
            self.load(program)
        literals = _as_query(query)
        self._send("QUERY " + ", ".join(map(str, literals)) + "?")
        status = self._recv()
        if status.startswith("ERROR"):
            raise ProtocolError(status)
        parts = status.split()
        if not parts or parts[0] not in LABELS or parts[1:] not in ([], ["NOMODEL"]):
            raise ProtocolError(f"bad status line {status!r}")
        answers = []
        while True:
            line = self._recv()
            if line == "END":
                break
            if line != "ANSWER" and not line.startswith("ANSWER "):
                raise ProtocolError(f"bad answer line {line!r}")
            try:
                answers.append(parse_bindings(line[6:]))
            except ParseError as e:
                raise ProtocolError(f"bad answer line {line!r}: {e}") from e
        return QueryOutcome(LABELS[parts[0]], tuple(answers), len(parts) == 2)

    def close(self):
        if self._close is not None:
            try:
                self._send("QUIT")
            except ProtocolError:
                pass
            self._close()
            self._close = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
