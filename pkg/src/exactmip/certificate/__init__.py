"""Certificate emission and independent verification."""

from .verify import Verdict, verify_certificate
from .writer import CertificateError, emit_certificate, emit_cut_certificate

__all__ = ["Verdict", "verify_certificate", "CertificateError", "emit_certificate",
           "emit_cut_certificate"]
