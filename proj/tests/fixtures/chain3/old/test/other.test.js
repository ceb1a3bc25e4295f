const assert = require('assert');
const a = require('../src/a');

test('other', () => {
  assert.strictEqual(a.other(1), 21);
});
