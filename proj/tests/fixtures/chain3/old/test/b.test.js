const assert = require('assert');
const b = require('../src/b');

test('viaG', () => {
  assert.strictEqual(b.viaG(2), 40);
});
