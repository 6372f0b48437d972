"""
Flask Dashboard
Read-only viewer over a sweep output directory
"""

import json
import os
import sys

from flask import Flask, jsonify, request

# Load environment variables from .env file
from dotenv import load_dotenv
load_dotenv(os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), '.env'))

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pandas as pd

from infrastructure.config import default_output_dir
from infrastructure.event_log import read_events
from model.campaign import read_seed_sets
from model.errors import AllocationFormatError

ENDPOINTS = ['/api/summary', '/api/report', '/api/allocations', '/api/allocations/<cell>',
             '/api/events']


def create_app(output_dir=None):
    app = Flask(__name__)
    app.config['OUTPUT_DIR'] = os.path.abspath(output_dir or default_output_dir())

    def path(*parts):
        return os.path.join(app.config['OUTPUT_DIR'], *parts)

    @app.route('/')
    def index():
        """Endpoint listing"""
        return jsonify({'output_dir': app.config['OUTPUT_DIR'], 'endpoints': ENDPOINTS})

    @app.route('/api/summary')
    def get_summary():
        """Per-cell totals written by the sweep"""
        try:
            with open(path('summary.json')) as handle:
                return jsonify(json.load(handle))
        except FileNotFoundError:
            return jsonify({'error': 'no summary yet', 'cells': []}), 404
        except Exception as e:
            print(f"Error reading summary: {e}")
            return jsonify({'error': str(e), 'cells': []}), 500

    @app.route('/api/report')
    def get_report():
        """Report rows, optionally filtered by ?allocator="""
        if not os.path.exists(path('report.csv')):
            return jsonify([]), 404
        try:
            frame = pd.read_csv(path('report.csv'))
        except Exception as e:
            print(f"Error reading report: {e}")
            return jsonify({'error': str(e)}), 500
        allocator = request.args.get('allocator')
        if allocator:
            frame = frame[frame['allocator'] == allocator]
        return jsonify(json.loads(frame.to_json(orient='records')))

    @app.route('/api/allocations')
    def list_allocations():
        """Cell names that have an allocation file"""
        folder = path('allocations')
        if not os.path.isdir(folder):
            return jsonify([])
        cells = sorted(name[:-4] for name in os.listdir(folder) if name.endswith('.txt'))
        return jsonify(cells)

    @app.route('/api/allocations/<cell>')
    def get_allocation(cell):
        """Seed sets of one cell, keyed by ad id"""
        target = path('allocations', f"{cell}.txt")
        if os.path.basename(cell) != cell or not os.path.exists(target):
            return jsonify({'error': f"unknown cell '{cell}'"}), 404
        try:
            records = read_seed_sets(target)
        except AllocationFormatError as e:
            return jsonify({'error': f"{cell}: {e}"}), 400
        seed_sets, distinct = {}, set()
        for _, ad_id, nodes in records:
            seed_sets.setdefault(str(ad_id), []).extend(nodes)
            distinct.update(nodes)
        return jsonify({'cell': cell, 'seed_sets': seed_sets, 'distinct_nodes': len(distinct)})

    @app.route('/api/events')
    def get_events():
        """Most recent structured events (?limit=, default 100)"""
        try:
            limit = int(request.args.get('limit', 100))
        except ValueError:
            return jsonify({'error': 'limit must be an integer'}), 400
        return jsonify(read_events(path('events.jsonl'), limit))

    return app


if __name__ == '__main__':
    port = int(os.getenv('FLASK_PORT', 5000))
    debug = os.getenv('FLASK_DEBUG', 'false').lower() == 'true'
    target = sys.argv[1] if len(sys.argv) > 1 else None

    app = create_app(target)
    print("="*60)
    print("AD ALLOCATION DASHBOARD")
    print("="*60)
    print(f"Output directory: {app.config['OUTPUT_DIR']}")
    print(f"Dashboard URL: http://localhost:{port}")
    print("="*60)
    app.run(host='0.0.0.0', port=port, debug=debug, use_reloader=False)
