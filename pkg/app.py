import logging

from flask import Flask, request, jsonify

# Import from our modules
from constants import SERVICE_NAME, SERVICE_VERSION, ErrorCodes
from reports import run_gap_certify, run_model_spectrum, run_validate_algebra
from utils import format_error_response, format_success_response
from validation import ValidationError, HypothesisError, validate_config

app = Flask(__name__)
logger = logging.getLogger(__name__)

# Initialize rate limiter (optional - only if Flask-Limiter is installed)
try:
    from flask_limiter import Limiter
    from flask_limiter.util import get_remote_address

    limiter = Limiter(
        app=app,
        key_func=get_remote_address,
        default_limits=["200 per day", "50 per hour"],
        storage_uri="memory://"
    )
    RATE_LIMITING_ENABLED = True
    logger.info("Rate limiting enabled")
except ImportError:
    logger.warning("Flask-Limiter not installed - rate limiting disabled")
    RATE_LIMITING_ENABLED = False
    limiter = None

COMPUTE_LIMIT = "30 per minute"

ENDPOINTS = {
    "/model-spectrum": "model",
    "/gap-certify": "certify",
    "/validate-algebra": "algebra",
}


def rate_limited(limit):
    """Apply a Flask-Limiter limit when the limiter is available"""
    def decorator(view):
        return limiter.limit(limit)(view) if limiter is not None else view
    return decorator


def _run_section(section_name, runner):
    """
    Validate the posted section, run it and format the response

    The body is either the bare section or {"seed": N, "<section>": {...}}.
    """
    data = request.get_json(silent=True)
    if not isinstance(data, dict) or not data:
        return jsonify(format_error_response(ErrorCodes.INVALID_INPUT, 'No data provided')), 400
    try:
        raw = dict(data) if section_name in data else {section_name: data}
        config = validate_config(raw)
        report = runner(config)
        results = dict(report.payload)
        if report.failure:
            results['failure'] = report.failure
        return jsonify(format_success_response(results))
    except HypothesisError as e:
        return jsonify(format_error_response(e.code, e.message)), 422
    except ValidationError as e:
        return jsonify(format_error_response(e.code, e.message)), 400
    except Exception:
        app.logger.exception("Unexpected error on %s", request.path)
        return jsonify({
            'success': False,
            'error': 'An unexpected error occurred'
        }), 500


@app.route('/')
def index():
    return jsonify({
        'service': SERVICE_NAME,
        'version': SERVICE_VERSION,
        'endpoints': sorted(ENDPOINTS),
    })


@app.route('/model-spectrum', methods=['POST'])
@rate_limited(COMPUTE_LIMIT)
def model_spectrum():
    """
    Model operator spectrum below a cutoff

    Expected JSON payload:
    {
        "wells": [{"metric": [[1]], "hessian_half": [[9.8696]]}],
        "cutoff": 20.0
    }
    """
    return _run_section('model', run_model_spectrum)


@app.route('/gap-certify', methods=['POST'])
@rate_limited(COMPUTE_LIMIT)
def gap_certify():
    """
    Gap certificate at one coupling or over a list of couplings

    Expected JSON payload:
    {
        "a1": 3.14159, "b1": 9.42478, "c0": 9.8696,
        "mode": "flat", "kappa": 0.25, "mu": 0.02
    }
    """
    return _run_section('certify', run_gap_certify)


@app.route('/validate-algebra', methods=['POST'])
@rate_limited(COMPUTE_LIMIT)
def validate_algebra():
    """
    Twisted-algebra identity suite

    Expected JSON payload:
    {"rank": 2, "flux": "1/3", "fiber_dim": 2, "samples": 50}
    """
    return _run_section('algebra', run_validate_algebra)


if __name__ == '__main__':
    import os
    port = int(os.environ.get('PORT', 8080))
    app.run(debug=False, host='0.0.0.0', port=port)
