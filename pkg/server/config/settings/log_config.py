import json
import logging
import traceback
from datetime import datetime
from pathlib import Path


class ColorFormatter(logging.Formatter):
    """
    Console/file formatter. Colours the level and message when enabled and
    appends the run context (scenario, sweep point) when a record carries it
    through ``extra=``.
    """
    COLORS = {
        'DEBUG': '\033[37m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[41m',
        'RESET': '\033[0m'
    }
    CONTEXT_FIELDS = ('scenario', 'sweep_point')

    def __init__(self, use_colors: bool = True):
        super().__init__(
            fmt='[%(asctime)s] %(levelname)s [%(name)s:%(lineno)s] %(message)s',
            datefmt='%d/%b/%Y %H:%M:%S'
        )
        self.use_colors = use_colors

    def _context(self, record: logging.LogRecord) -> str:
        parts = [
            f"{field}={getattr(record, field)}"
            for field in self.CONTEXT_FIELDS
            if getattr(record, field, None) is not None
        ]
        return f" ({', '.join(parts)})" if parts else ''

    def format(self, record: logging.LogRecord) -> str:
        original_msg = record.msg
        original_args = record.args
        original_levelname = record.levelname

        try:
            message = record.getMessage() + self._context(record)
            record.args = ()
            record.msg = message

            if self.use_colors and original_levelname in self.COLORS:
                color = self.COLORS[original_levelname]
                reset = self.COLORS['RESET']
                record.levelname = f"{color}{original_levelname}{reset}"
                record.msg = f"{color}{message}{reset}"

            return super().format(record)

        finally:
            record.msg = original_msg
            record.args = original_args
            record.levelname = original_levelname


class ErrorTracebackHandler(logging.Handler):
    """
    Writes one summary line per error to ``errors/errors.log`` and, when an
    exception is attached, the full traceback plus the numerical diagnostics
    of computation errors to a separate file under ``errors/tracebacks``.
    """
    def __init__(self, base_dir: str, level: int = logging.ERROR):
        super().__init__(level)
        self.base_dir = Path(base_dir)
        self.errors_dir = self.base_dir / 'errors'
        self.tracebacks_dir = self.errors_dir / 'tracebacks'
        self.tracebacks_dir.mkdir(parents=True, exist_ok=True)

        self.summary_formatter = logging.Formatter(
            '[%(asctime)s] %(levelname)s [%(name)s:%(lineno)s] %(message)s',
            '%d/%b/%Y %H:%M:%S'
        )

    def get_error_summary(self, record: logging.LogRecord) -> str:
        """
        Computation errors are summarised by their error code so that
        ``errors.log`` can be grepped per failure kind.
        """
        message = record.getMessage()
        exc = record.exc_info[1] if record.exc_info else None
        code = getattr(exc, 'code', None)
        if code:
            return f"[{code}] {message}"
        return message

    def emit(self, record):
        original_exc_info = record.exc_info
        original_msg = record.msg
        original_args = record.args

        try:
            try:
                record.msg = self.get_error_summary(record)
                record.args = ()
                record.exc_info = None
                summary = self.summary_formatter.format(record)

                if original_exc_info:
                    tb_file = self._write_traceback_file(record, original_exc_info)
                    summary += f"\nFull traceback available in: {tb_file.relative_to(self.base_dir)}"

                with open(self.errors_dir / 'errors.log', 'a', encoding='utf-8') as f:
                    f.write(summary + '\n')

            finally:
                record.exc_info = original_exc_info
                record.msg = original_msg
                record.args = original_args

        except Exception as e:
            with open(self.errors_dir / 'errors.log', 'a', encoding='utf-8') as f:
                f.write(f"[{datetime.now().strftime('%d/%b/%Y %H:%M:%S')}] "
                        f"ERROR: Failed to process error record: {str(e)}\n")

    def _write_traceback_file(self, record, exc_info) -> Path:
        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S_%f')
        tb_file = self.tracebacks_dir / f'traceback_{timestamp}.log'

        with open(tb_file, 'w', encoding='utf-8') as f:
            f.write(self.summary_formatter.format(record) + '\n')
            f.write('Detailed Traceback:\n')
            f.write(''.join(traceback.format_exception(*exc_info)))

            diagnostics = getattr(exc_info[1], 'diagnostics', None)
            if diagnostics:
                f.write('\nDiagnostics:\n')
                f.write(json.dumps(diagnostics, indent=2, default=str))
                f.write('\n')

        return tb_file
