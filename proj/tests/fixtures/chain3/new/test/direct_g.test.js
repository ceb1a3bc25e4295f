const assert = require('assert');
const c = require('../src/c');

test('g', () => {
  assert.strictEqual(c.g(4), 8);
});
